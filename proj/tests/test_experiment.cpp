#include "vrba/experiment.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>

using namespace vrba;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name)
{
    const fs::path dir = fs::temp_directory_path() / ("vrba_test_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json small_doc()
{
    return json::parse(R"({
        "sweep": {"snr_db": [-10, 10], "num_streams": [4]},
        "num_channel_draws": 2,
        "seed": 3,
        "solvers": ["fixed1", "fixed2", "es", "qsearch", "sa9", "sa5", "mincrlb", "qsearch_fx"]
    })");
}

std::string config_error_field(const json &doc)
{
    try {
        parse_config(doc);
    } catch (const ConfigError &e) {
        return e.field();
    }
    return "<none>";
}

} // namespace

TEST(Config, DefaultsFollowTableOne)
{
    const ExperimentConfig cfg = default_config();
    EXPECT_EQ(cfg.array.num_tx_antennas, 64);
    EXPECT_EQ(cfg.array.num_rx_antennas, 128);
    EXPECT_DOUBLE_EQ(cfg.array.carrier_frequency, 28e9);
    EXPECT_DOUBLE_EQ(cfg.array.tx_rx_separation, 100.0);
    EXPECT_DOUBLE_EQ(cfg.power.eta_PA, 0.4);
    EXPECT_DOUBLE_EQ(cfg.power.c, 1432e-15);
    EXPECT_DOUBLE_EQ(cfg.power.f_s, 400e6);
    ASSERT_EQ(cfg.scenarios.size(), 2u);
    EXPECT_EQ(cfg.scenarios[0].scenario.num_dominant_scatterers, 1);
    EXPECT_EQ(cfg.scenarios[1].scenario.num_dominant_scatterers, 2);
    std::vector<std::string> names;
    for (const auto &s : cfg.solvers) {
        names.push_back(s.name);
    }
    EXPECT_EQ(names, (std::vector<std::string>{"fixed1", "fixed2", "es", "qsearch", "sa9", "sa5"}));
    EXPECT_EQ(cfg.num_streams, (std::vector<int>{8, 12}));
}

TEST(Config, ErrorsNameTheField)
{
    const std::vector<std::pair<std::string, std::string>> cases = {
        {R"({"bogus": 1})", "bogus"},
        {R"({"sweep": {"snr_db": []}})", "sweep.snr_db"},
        {R"({"sweep": {"snr_db": "high"}})", "sweep.snr_db"},
        {R"({"sweep": {"num_streams": [200]}})", "sweep.num_streams"},
        {R"({"sweep": {"num_bits": 0}})", "sweep.num_bits"},
        {R"({"sweep": {"noise_power": 0}})", "sweep.noise_power"},
        {R"({"solvers": ["es", "ga"]})", "solvers[1]"},
        {R"({"solvers": [{"name": "sa9", "r": 1.5}]})", "solvers[0]"},
        {R"({"solvers": [{"name": "es", "r": 0.5}]})", "solvers[0]"},
        {R"({"solvers": [{"name": "sa5", "objective": "x"}]})", "solvers[0].objective"},
        {R"({"power": {"eta_PA": 0}})", "power"},
        {R"({"power": {"budget_form": "x"}})", "power.budget_form"},
        {R"({"power": {"P_ADC_W": -1}})", "power.P_ADC_W"},
        {R"({"array": {"num_tx_antennas": 0}})", "array"},
        {R"({"scenarios": [{"num_dominant_scatterers": 3}]})", "scenarios[0]"},
        {R"({"scenarios": [{"id": 1}, {"id": 1}]})", "scenarios[1].id"},
        {R"({"scenarios": [{"gain_model": "x"}]})", "scenarios[0].gain_model"},
        {R"({"distortion_table": [[1, 0.3], [2, 0.5]]})", "distortion_table"},
        {R"({"threads": 0})", "threads"},
        {R"({"validation": {"extra": 1}})", "validation.extra"},
        {R"({"num_channel_draws": 0})", "num_channel_draws"},
        {R"([1, 2])", "<root>"},
    };
    for (const auto &[text, field] : cases) {
        EXPECT_EQ(config_error_field(json::parse(text)), field) << text;
    }
    EXPECT_THROW(load_config("/nonexistent/vrba.json"), ConfigError);
    EXPECT_THROW(parse_solver_list("es,,bogus"), ConfigError);
    EXPECT_EQ(parse_solver_list("es,sa5")[1].sa.r, 0.5);
}

TEST(Config, BudgetResolution)
{
    ExperimentConfig cfg = parse_config(json::object());
    const PowerModel half = cfg.power_for(8);
    EXPECT_NEAR(half.P_ADC_budget, 0.5 * 2.0 * half.step_power() * 8 * 16, 1e-15);
    EXPECT_EQ(half.N_s, 8);
    EXPECT_EQ(half.N_r, 128);

    cfg = parse_config(json::parse(R"({"power": {"P_ADC_W": null}})"));
    EXPECT_TRUE(std::isinf(cfg.power_for(8).P_ADC_budget));
    cfg = parse_config(json::parse(R"({"power": {"P_ADC_W": 0.05, "budget_form": "eq24"}})"));
    EXPECT_DOUBLE_EQ(cfg.power_for(12).P_ADC_budget, 0.05);
    EXPECT_EQ(cfg.power_for(12).budget_form, BudgetForm::Eq24);
}

TEST(Config, SolverObjects)
{
    const auto cfg = parse_config(json::parse(
        R"({"solvers": [{"name": "sa9", "m": 8, "T0": 50, "cost_scale": 2.5, "objective": "exact"}, "sa5"]})"));
    ASSERT_EQ(cfg.solvers.size(), 2u);
    EXPECT_EQ(cfg.solvers[0].sa.m, 8);
    EXPECT_EQ(*cfg.solvers[0].sa.T0, 50.0);
    EXPECT_EQ(*cfg.solvers[0].sa.cost_scale, 2.5);
    EXPECT_EQ(cfg.solvers[0].sa.objective, SaObjective::ExactEe);
    EXPECT_EQ(cfg.solvers[1].sa.r, 0.5);
}

TEST(Sweep, RowsAreConsistent)
{
    const ExperimentConfig cfg = parse_config(small_doc());
    const auto rows = run_sweep(cfg);
    ASSERT_EQ(rows.size(), 2u * 1 * 2 * 2 * 8);
    std::map<std::tuple<int, int, double>, std::map<std::string, ResultRow>> cells;
    for (const auto &r : rows) {
        ASSERT_TRUE(r.error.empty()) << r.error;
        EXPECT_NEAR(r.ee, r.rate / r.power_W, 1e-12 * r.ee);
        EXPECT_EQ(r.runtime_ms, 0.0);
        cells[{r.scenario, r.draw, r.snr_db}][r.solver] = r;
    }
    for (const auto &[key, by] : cells) {
        const double es = by.at("es").ee;
        for (const auto &[name, r] : by) {
            if (r.feasible) {
                EXPECT_LE(r.ee, es * (1.0 + 1e-12)) << name;
            }
        }
        EXPECT_GE(by.at("qsearch").surrogate, by.at("sa9").surrogate * (1.0 - 1e-12));
        EXPECT_EQ(by.at("es").counters.objective_evals, by.at("qsearch").counters.objective_evals);
    }
}

TEST(Sweep, ThreadCountDoesNotChangeRows)
{
    ExperimentConfig cfg = parse_config(small_doc());
    const auto a = run_sweep(cfg);
    cfg.threads = 4;
    const auto b = run_sweep(cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].solver, b[k].solver);
        EXPECT_EQ(a[k].b_star, b[k].b_star);
        EXPECT_EQ(a[k].ee, b[k].ee);
    }
}

TEST(Sweep, InfeasibleBudgetBecomesErrorRows)
{
    json doc = small_doc();
    doc["power"] = {{"P_ADC_W", 1e-6}};
    const auto rows = run_sweep(parse_config(doc));
    for (const auto &r : rows) {
        if (r.solver == "fixed1" || r.solver == "fixed2") {
            EXPECT_FALSE(r.feasible);
            EXPECT_TRUE(r.error.empty());
        } else {
            EXPECT_NE(r.error.find("infeasible"), std::string::npos) << r.solver;
        }
    }
}

TEST(Sweep, SummaryStatistics)
{
    const ExperimentConfig cfg = parse_config(small_doc());
    const auto rows = run_sweep(cfg);
    const auto sum = summarize(rows, cfg);
    ASSERT_EQ(sum.size(), 2u * 2 * 8);
    for (const auto &s : sum) {
        double acc = 0.0;
        int n = 0;
        for (const auto &r : rows) {
            if (r.scenario == s.scenario && r.snr_db == s.snr_db && r.solver == s.solver && r.N_s == s.N_s) {
                acc += r.ee;
                ++n;
            }
        }
        EXPECT_EQ(s.draws, n);
        EXPECT_NEAR(s.ee_mean, acc / n, 1e-15 * std::abs(acc));
    }
}

TEST(Output, RunIsByteReproducible)
{
    const fs::path a = scratch("run_a");
    const fs::path b = scratch("run_b");
    ExperimentConfig cfg = parse_config(small_doc());
    cfg.output_dir = a.string();
    const RunSummary ra = run_experiment(cfg);
    cfg.output_dir = b.string();
    cfg.threads = 3;
    run_experiment(cfg);
    EXPECT_EQ(ra.rows, 64u);
    for (const char *f : {"raw_results.csv", "ee_vs_snr.csv", "rate_vs_snr.csv", "ee_s1_ns4.dat", "rate_s2_ns4.dat"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    const std::string raw = slurp(a / "raw_results.csv");
    EXPECT_EQ(raw.rfind("# vrba raw per-draw results v1 columns: scenario", 0), 0u);
    const json manifest = json::parse(slurp(a / "manifest.json"));
    EXPECT_EQ(manifest["version"], kVersion);
    EXPECT_EQ(manifest["files"]["raw_results.csv"], file_hash(a / "raw_results.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Output, ComplexityRows)
{
    json doc = small_doc();
    doc["complexity"] = {{"num_streams", {8}}};
    doc["solvers"] = {"es", "qsearch", "sa9", "sa5"};
    const auto rows = run_complexity(parse_config(doc));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].measured.complex_mults, 65536u * 80);
    EXPECT_EQ(rows[1].measured.real_mults, 288u);
    for (const auto &r : rows) {
        EXPECT_EQ(r.measured.complex_mults, r.predicted.complex_mults) << r.solver;
    }
}

TEST(Output, CsvQuoting)
{
    EXPECT_EQ(csv_quote("plain"), "plain");
    EXPECT_EQ(csv_quote("[1 2]"), "[1 2]");
    EXPECT_EQ(csv_quote("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_quote("say \"x\""), "\"say \"\"x\"\"\"");
    EXPECT_EQ(fmt(0.1), "0.10000000000000001");
}

TEST(ChannelFile, RoundTrip)
{
    ArrayConfig ac;
    ac.num_tx_antennas = 16;
    ac.num_rx_antennas = 32;
    ac.num_streams = 4;
    ScattererScenario sc;
    sc.num_diffuse_paths = 6;
    const auto chan = generate_channel(ac, sc, 77);
    const json j = json::parse(channel_to_json(chan).dump());
    const auto back = channel_from_json(j);
    EXPECT_TRUE(back.H == chan.H);
    EXPECT_EQ(back.seed, 77u);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(back.sigma(i), chan.sigma(i), 1e-12 * chan.sigma(0));
    }
    json bad = j;
    bad["entries"].erase(0);
    EXPECT_THROW(channel_from_json(bad), ConfigError);
}
