// nslab <subcommand> --scenario <path> [--out <dir>] [--seed <u64>]
//
// Exit codes: 0 all asserts pass, 2 invalid input, 3 numeric failure,
// 4 an asserted tolerance failed.

#include "nslab/errors.hpp"
#include "nslab/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw nslab::IoError("cannot write " + path.string());
    out << content;
    if (!out) throw nslab::IoError("write failed: " + path.string());
}

int run(const std::string& sub, const std::string& scenario, const std::string& out_dir,
        std::optional<std::uint64_t> seed) {
    nslab::Scenario sc = nslab::load_scenario(scenario);
    if (seed) sc.run.seed = *seed;
    nslab::RunOutput res = nslab::run_subcommand(sc, sub);

    fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw nslab::IoError("cannot create " + dir.string() + ": " + ec.message());
    std::string summary = res.summary.dump(2) + "\n";
    write_file(dir / (sub + ".json"), summary);
    for (const auto& [name, content] : res.files) write_file(dir / name, content);
    std::cout << summary;
    return res.asserts_pass ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Normal shift laboratory"};
    app.require_subcommand(1);

    std::string scenario, out_dir = ".";
    std::optional<std::uint64_t> seed;
    for (const auto& name : nslab::subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--scenario", scenario, "scenario JSON file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override run.seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        return run(sub, scenario, out_dir, seed);
    } catch (const nslab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.error_class() == nslab::ErrorClass::Validation ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
