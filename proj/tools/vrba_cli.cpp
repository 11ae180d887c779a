// vrba: experiment runner for variable-resolution ADC bit allocation.
//
// Failures print {"error": {...}} on stderr and exit nonzero:
//   2 configuration or usage, 3 infeasible budget, 4 numerical, 1 other.

#include "vrba/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int exit_code_for(const std::string &kind)
{
    if (kind == "config" || kind == "usage") {
        return 2;
    }
    if (kind == "infeasible") {
        return 3;
    }
    if (kind == "rank" || kind == "singularity" || kind == "dimension" || kind == "domain") {
        return 4;
    }
    return 1;
}

int report_error(const std::string &kind, const std::string &message, const std::string &field = {})
{
    vrba::json j;
    j["error"]["kind"] = kind;
    j["error"]["message"] = message;
    if (!field.empty()) {
        j["error"]["field"] = field;
    }
    std::cerr << j.dump() << '\n';
    return exit_code_for(kind);
}

vrba::ExperimentConfig config_or_default(const std::string &path)
{
    if (path.empty()) {
        vrba::ExperimentConfig cfg = vrba::default_config();
        cfg.source = vrba::json::object();
        return cfg;
    }
    return vrba::load_config(path);
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Energy-efficient bit allocation for variable-resolution ADC receivers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", vrba::kVersion);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string solvers;
    int threads = 0;

    auto *run = app.add_subcommand("run", "Sweep SNR / streams / scenarios and write CSV results");
    run->add_option("--config", config_path, "Experiment JSON")->required();
    run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    run->add_option("--seed", seed, "Master seed (overrides seed)");
    run->add_option("--solvers", solvers, "Comma list of es,qsearch,qsearch_fx,sa9,sa5,fixed1,fixed2,mincrlb");
    run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    auto *validate = app.add_subcommand("validate", "Monte-Carlo checks of the analytic model");
    validate->add_option("--config", config_path, "Experiment JSON")->required();
    validate->add_option("--out", out_dir, "Output directory");
    validate->add_option("--seed", seed, "Master seed");

    auto *complexity = app.add_subcommand("complexity", "Operation-count report");
    complexity->add_option("--config", config_path, "Experiment JSON")->required();
    complexity->add_option("--out", out_dir, "Output directory");
    complexity->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    int streams = 8;
    int scenario_id = 2;
    std::string channel_out;
    auto *dump = app.add_subcommand("dump-channel", "Write one channel realisation as JSON");
    dump->add_option("--seed", seed, "Channel seed")->required();
    dump->add_option("--config", config_path, "Experiment JSON for array/scenario settings");
    dump->add_option("--streams", streams, "Number of streams")->check(CLI::PositiveNumber);
    dump->add_option("--scenario", scenario_id, "Scenario id from the config (default scenarios: 1, 2)");
    dump->add_option("--out", channel_out, "Output file (default stdout)");

    std::string channel_file;
    auto *inspect = app.add_subcommand("inspect-channel", "Load a channel JSON and print its SVD summary");
    inspect->add_option("--file", channel_file, "Channel JSON")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return report_error("usage", e.what());
    }

    try {
        if (*run) {
            vrba::ExperimentConfig cfg = vrba::load_config(config_path);
            if (!out_dir.empty()) {
                cfg.output_dir = out_dir;
            }
            if (run->count("--seed")) {
                cfg.seed = seed;
            }
            if (!solvers.empty()) {
                cfg.solvers = vrba::parse_solver_list(solvers);
            }
            if (threads > 0) {
                cfg.threads = threads;
            }
            const vrba::RunSummary rs = vrba::run_experiment(cfg);
            std::cout << vrba::json{{"status", "ok"},
                                    {"rows", rs.rows},
                                    {"error_rows", rs.error_rows},
                                    {"output_dir", cfg.output_dir}}
                             .dump()
                      << '\n';
        } else if (*validate) {
            vrba::ExperimentConfig cfg = vrba::load_config(config_path);
            if (!out_dir.empty()) {
                cfg.output_dir = out_dir;
            }
            if (validate->count("--seed")) {
                cfg.seed = seed;
            }
            std::filesystem::create_directories(cfg.output_dir);
            const auto rows = vrba::run_validation(cfg);
            vrba::write_validation(std::filesystem::path(cfg.output_dir) / "validation.csv", rows);
            std::size_t failed = 0;
            for (const auto &r : rows) {
                failed += r.pass ? 0 : 1;
            }
            vrba::write_manifest(cfg.output_dir, cfg, "validate", {"validation.csv"},
                                 {{"checks", rows.size()}, {"failed", failed}});
            std::cout << vrba::json{{"status", "ok"}, {"checks", rows.size()}, {"failed", failed}}.dump() << '\n';
        } else if (*complexity) {
            vrba::ExperimentConfig cfg = vrba::load_config(config_path);
            if (!out_dir.empty()) {
                cfg.output_dir = out_dir;
            }
            if (threads > 0) {
                cfg.threads = threads;
            }
            std::filesystem::create_directories(cfg.output_dir);
            const auto rows = vrba::run_complexity(cfg);
            vrba::write_complexity(std::filesystem::path(cfg.output_dir) / "complexity.csv", rows);
            vrba::write_manifest(cfg.output_dir, cfg, "complexity", {"complexity.csv"});
            std::cout << vrba::json{{"status", "ok"}, {"rows", rows.size()}}.dump() << '\n';
        } else if (*dump) {
            const vrba::ExperimentConfig cfg = config_or_default(config_path);
            const vrba::ScenarioConfig *sc = nullptr;
            for (const auto &s : cfg.scenarios) {
                if (s.id == scenario_id) {
                    sc = &s;
                }
            }
            if (!sc) {
                throw vrba::ConfigError("scenario", "no scenario with id " + std::to_string(scenario_id));
            }
            vrba::ArrayConfig ac = cfg.array;
            ac.num_streams = streams;
            const auto chan = vrba::generate_channel(ac, sc->scenario, seed);
            const std::string text = vrba::channel_to_json(chan).dump();
            if (channel_out.empty()) {
                std::cout << text << '\n';
            } else {
                std::ofstream(channel_out, std::ios::binary) << text << '\n';
            }
        } else if (*inspect) {
            std::ifstream in(channel_file);
            vrba::json doc;
            try {
                doc = vrba::json::parse(in);
            } catch (const vrba::json::parse_error &e) {
                throw vrba::ConfigError("file", std::string("JSON parse error: ") + e.what());
            }
            const auto chan = vrba::channel_from_json(doc);
            const auto hc = vrba::design_combiner(chan);
            vrba::json out;
            out["dims"] = {chan.num_rx(), chan.num_tx()};
            out["num_streams"] = chan.num_streams;
            out["singular_values"] = std::vector<double>(chan.sigma.data(), chan.sigma.data() + chan.sigma.size());
            out["combiner_identity_error"] = hc.identity_error;
            out["combiner_residual"] = hc.residual;
            std::cout << out.dump() << '\n';
        }
    } catch (const vrba::ConfigError &e) {
        return report_error(e.kind(), e.what(), e.field());
    } catch (const vrba::Error &e) {
        return report_error(e.kind(), e.what());
    } catch (const std::exception &e) {
        return report_error("internal", e.what());
    }
    return 0;
}
