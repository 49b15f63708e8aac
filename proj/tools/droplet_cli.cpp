// Batch experiment driver for the droplet point-process laboratory.
//
//   droplet run <config-file>       execute an experiment
//   droplet validate <config-file>  check a config, print all errors
//   droplet list-functions          test-function families and parameters
//   droplet version                 artifact version
//
// Exit codes: 0 success, 1 config error, 2 runtime failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include "droplet/config.hpp"
#include "droplet/runner.hpp"
#include "droplet/version.hpp"

namespace {

int usage() {
    std::cerr << "usage: droplet <run|validate|list-functions|version> [config-file]\n";
    return 1;
}

bool read_file(const std::string& path, std::string& out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return false;
    std::ostringstream ss;
    ss << f.rdbuf();
    out = ss.str();
    return true;
}

void print_errors(const droplet::ParseResult& res) {
    for (const auto& e : res.errors) {
        if (e.line > 0)
            std::cerr << "line " << e.line << ": " << e.message << "\n";
        else
            std::cerr << "config: " << e.message << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage();
    std::string cmd = argv[1];

    if (cmd == "version") {
        std::cout << "droplet " << droplet::kVersion << "\n";
        return 0;
    }
    if (cmd == "list-functions") {
        std::cout << "radial_bump(a, b)          smooth annular bump supported on a < r < b\n"
                  << "angular_mode(k[, cutoff])  Re((z/r0)^k), capped `cutoff` past the droplet edge\n"
                  << "gaussian_bump(c, w)        Gaussian of width w centered at c on the real axis\n"
                  << "constant_capped(R)         1 out to radius R, smoothly cut by R + 1/2\n";
        return 0;
    }
    if (cmd != "run" && cmd != "validate") return usage();
    if (argc < 3) return usage();

    std::string text;
    if (!read_file(argv[2], text)) {
        std::cerr << "cannot read config file '" << argv[2] << "'\n";
        return 1;
    }
    droplet::ParseResult res = droplet::parse_config(text);
    if (!res.ok) {
        print_errors(res);
        return 1;
    }
    if (cmd == "validate") {
        std::cout << "config ok\n" << droplet::render_config(res.config);
        return 0;
    }

    droplet::RunOutput out = droplet::run_experiment(res.config);
    if (out.exit_code != 0) {
        std::cerr << "run failed: " << out.message << "\n";
        return out.exit_code;
    }
    for (const auto& f : out.files) std::cout << "wrote " << f << "\n";
    std::cout << "wrote " << out.manifest_path << "\n";
    return 0;
}
