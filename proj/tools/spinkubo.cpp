#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>

#include "spinkubo/cli.hpp"
#include "spinkubo/errors.hpp"
#include "spinkubo/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"spinkubo: spin transport coefficients of gapped periodic "
                 "tight-binding models on Z^2"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    int threads = 1;

    const std::vector<std::string> names = {
        "bands",        "gap",   "projector",    "sigma",        "torque",
        "conductance",  "chern", "decomposition", "oracle-check", "sweep"};
    for (const auto& n : names) {
        CLI::App* sub = app.add_subcommand(n);
        sub->add_option("config", config_path, "configuration file")->required();
        sub->add_option("--output-dir", output_dir, "override [output] directory");
        sub->add_option("--threads", threads, "worker pool size");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    using nlohmann::json;
    try {
        spinkubo::set_worker_threads(threads);
        const spinkubo::RunConfig cfg = spinkubo::parse_config_file(config_path);
        return spinkubo::run_subcommand(sub, cfg, output_dir);
    } catch (const spinkubo::ConfigInvalid& e) {
        std::cout << json{{"error", "ConfigInvalid"}, {"message", e.what()}}.dump()
                  << std::endl;
        return 2;
    } catch (const spinkubo::NumericalError& e) {
        std::cout << json{{"error", "NumericalError"}, {"message", e.what()}}.dump()
                  << std::endl;
        return 3;
    } catch (const std::exception& e) {
        std::cout << json{{"error", "Unexpected"}, {"message", e.what()}}.dump()
                  << std::endl;
        return 3;
    }
}
