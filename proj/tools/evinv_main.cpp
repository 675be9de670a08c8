// Command line front end: reads a key=value config, runs one of the four
// modes (forward, invert, roundtrip, convergence), and reports the files
// it wrote. Exit codes: 0 success, 2 rejected problem data, 3 numerical
// breakdown, 4 bad configuration or usage.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "evinv/evinv.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Recovers a scalar time-dependent zeroth-order coefficient of a "
                 "linear evolution equation from a scalar measurement trace"};
    std::string config_path;
    std::string mode_override;
    std::string out_override;
    int threads_override = -1;

    app.add_option("--config", config_path, "Path to a key=value config file")
        ->required();
    app.add_option("--mode", mode_override,
                   "Override the mode key (forward, invert, roundtrip, convergence)");
    app.add_option("--out", out_override, "Override the output directory");
    app.add_option("--threads", threads_override,
                   "Override worker thread count (0 = all hardware threads)")
        ->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 4;
    }

    try {
        evinv::Config cfg = evinv::parse_config_file(config_path);
        if (!mode_override.empty()) cfg.mode = mode_override;
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (threads_override >= 0) cfg.threads = static_cast<unsigned>(threads_override);
        evinv::validate_config(cfg);

        const evinv::RunResult result = evinv::run(cfg);
        for (const auto& line : result.lines) {
            std::printf("%s\n", line.c_str());
        }
        for (const auto& file : result.files) {
            std::printf("wrote %s\n", file.c_str());
        }
        return 0;
    } catch (const evinv::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 4;
    } catch (const evinv::hypothesis_error& e) {
        std::fprintf(stderr, "hypothesis violated: %s\n", e.what());
        return 2;
    } catch (const evinv::numeric_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
