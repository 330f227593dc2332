#include "lfg/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

// exit codes: 0 all checks pass, 1 check failure, 2 configuration error,
// 3 numerical failure

int do_run(const lfg::Config& cfg) {
    auto res = lfg::run_experiment(cfg);

    std::string txt = res.report.text();
    if (!res.extra_text.empty()) txt += "\n" + res.extra_text;
    std::cout << txt;

    auto j = res.report.json();
    for (const auto& [k, v] : cfg.entries()) j["config"][k] = v;
    if (!res.extra.is_null()) j["certificate"] = res.extra;

    const std::filesystem::path out = cfg.str("output.dir", "out");
    std::filesystem::create_directories(out);
    lfg::write_file_atomic(out / "report.txt", txt);
    lfg::write_file_atomic(out / "report.json", j.dump(2) + "\n");
    for (const auto& [name, body] : res.csv_files) lfg::write_file_atomic(out / name, body);

    return res.report.verdict() == lfg::Verdict::pass ? 0 : 1;
}

int do_describe(const std::string& name, int dim) {
    auto m = lfg::make_model(name, dim);
    std::cout << m->describe() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lfslab: weighted Lorentz-Finsler verification scenarios"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run one experiment and write report + CSVs");
    std::string config_path;
    std::vector<std::string> overrides;
    run->add_option("--config", config_path, "config file with dotted key = value lines");
    run->add_option("--set", overrides, "override: dotted.key=value (repeatable)");
    // convenience flags for the most common dotted keys
    std::map<std::string, std::string> flag_keys = {
        {"--model", "model.name"}, {"--dim", "model.dim"},   {"--experiment", "experiment"},
        {"--weight", "weight.name"}, {"--N", "N"},           {"--eps", "eps"},
        {"--seed", "seed"},          {"--out", "output.dir"}, {"--t-max", "ray.t_max"}};
    std::map<std::string, std::string> flag_values;
    for (const auto& [flag, key] : flag_keys)
        run->add_option(flag, flag_values[flag], "sets " + key);

    auto* list = app.add_subcommand("list-models", "list registered model names");

    auto* desc = app.add_subcommand("describe", "print a model's structure and known facts");
    std::string desc_name;
    int desc_dim = 4;
    desc->add_option("name", desc_name, "model name")->required();
    desc->add_option("--dim", desc_dim, "dimension used to instantiate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list->parsed()) {
            for (const auto& n : lfg::model_names()) std::cout << n << "\n";
            return 0;
        }
        if (desc->parsed()) return do_describe(desc_name, desc_dim);

        lfg::Config cfg;
        if (!config_path.empty()) cfg.load_file(config_path);
        for (const auto& [flag, key] : flag_keys)
            if (!flag_values[flag].empty()) cfg.set(key, flag_values[flag]);
        for (const auto& o : overrides) cfg.set_pair(o);
        return do_run(cfg);
    } catch (const lfg::config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
