#include "cli.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "hmmrates/baseline.hpp"
#include "hmmrates/basis.hpp"
#include "hmmrates/em.hpp"
#include "hmmrates/error.hpp"
#include "hmmrates/forecast.hpp"
#include "hmmrates/io.hpp"
#include "hmmrates/panel.hpp"
#include "hmmrates/parallel.hpp"
#include "hmmrates/smc.hpp"
#include "hmmrates/synth.hpp"
#include "hmmrates/text.hpp"

#ifndef HMMRATES_VERSION
#define HMMRATES_VERSION "0.0.0"
#endif

namespace hmmrates::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Invalid or unreadable configuration, missing files.
class ConfigError : public Error {
public:
    using Error::Error;
};

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Typed access to an optional config member with a clear error path.
class Section {
public:
    Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
    }

    bool has(const char* key) const { return doc_.contains(key); }

    void allow_only(std::initializer_list<const char*> keys) const {
        const std::set<std::string> known(keys.begin(), keys.end());
        for (auto it = doc_.begin(); it != doc_.end(); ++it)
            if (!known.count(it.key())) throw ConfigError("config: unknown key '" + name(it.key().c_str()) + "'");
    }

    Section section(const char* key) const {
        static const json empty = json::object();
        return has(key) ? Section(doc_.at(key), name(key)) : Section(empty, name(key));
    }

    int positive_int(const char* key, int fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000'000)
            throw ConfigError("config: '" + name(key) + "' must be a positive integer");
        return v.get<int>();
    }

    std::int64_t count(const char* key, std::int64_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ConfigError("config: '" + name(key) + "' must be a nonnegative integer");
        return v.get<std::int64_t>();
    }

    double real(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_number()) throw ConfigError("config: '" + name(key) + "' must be a number");
        return v.get<double>();
    }

    std::string text(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_string()) throw ConfigError("config: '" + name(key) + "' must be a string");
        return v.get<std::string>();
    }

    std::string required_text(const char* key) const {
        if (!has(key)) throw ConfigError("config: missing '" + name(key) + "'");
        return text(key, "");
    }

    std::vector<double> reals(const char* key, std::vector<double> fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_array()) throw ConfigError("config: '" + name(key) + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError("config: '" + name(key) + "' must be an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    const json& raw(const char* key) const { return doc_.at(key); }
    std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const json& doc_;
    std::string path_;
};

template <typename Enum>
Enum choose(const Section& s, const char* key, Enum fallback, const std::map<std::string, Enum>& options) {
    if (!s.has(key)) return fallback;
    const std::string v = s.text(key, "");
    const auto it = options.find(v);
    if (it == options.end()) {
        std::string msg = "config: '" + s.name(key) + "' must be one of";
        for (const auto& [k, _] : options) msg += " " + k;
        throw ConfigError(msg);
    }
    return it->second;
}

struct Run {
    std::string command;
    json config;
    fs::path base_dir;
    fs::path out_dir;
    std::uint64_t seed = 1;
    std::optional<fs::path> theta0_path;
    std::vector<std::string> outputs;
    json extra = json::object();

    Section root() const { return Section(config, ""); }
    fs::path resolve(const std::string& p) const {
        const fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const fs::path path = out_dir / name;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + path.string());
        body(f);
        f.flush();
        if (!f) throw ConfigError("failed writing " + path.string());
        outputs.push_back(name);
    }

    void write_json(const std::string& name, const json& doc) {
        write(name, [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
    }
};

CellKind panel_kind(const Run& run) {
    const Section root = run.root();
    const Section basis = root.section("basis");
    const CellKind fallback = basis.text("kind", "linear2") == "tensor" ? CellKind::termination : CellKind::inception;
    return choose(root, "kind", fallback,
                  std::map<std::string, CellKind>{{"inception", CellKind::inception},
                                                  {"termination", CellKind::termination}});
}

BasisSet make_basis(const Run& run) {
    const Section basis = run.root().section("basis");
    basis.allow_only({"kind", "params"});
    const Section params = basis.section("params");
    const std::string kind = basis.text("kind", "linear2");
    const auto lo = static_cast<int>(params.count("age_lo", 25));
    const auto hi = static_cast<int>(params.count("age_hi", 64));
    const double mid = params.real("midpoint", 40.0);
    if (kind == "linear2") return BasisSet::linear2(lo, hi);
    if (kind == "piecewise3") return BasisSet::piecewise3(mid, lo, hi);
    if (kind == "tensor") {
        const auto age = choose(params, "age", AgeFamily::linear2,
                                std::map<std::string, AgeFamily>{{"linear2", AgeFamily::linear2},
                                                                 {"piecewise3", AgeFamily::piecewise3}});
        const auto dur = choose(params, "duration", DurationFamily::linear,
                                std::map<std::string, DurationFamily>{{"linear", DurationFamily::linear},
                                                                      {"exponential", DurationFamily::exponential}});
        return BasisSet::tensor(age, dur, lo, hi, mid);
    }
    if (kind == "custom") {
        const fs::path path = run.resolve(params.required_text("table"));
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open basis table " + path.string());
        return load_custom_basis(in);
    }
    throw ConfigError("config: 'basis.kind' must be one of linear2 piecewise3 tensor custom");
}

CellPanel load_configured_panel(const Run& run) {
    const fs::path path = run.resolve(run.root().required_text("panel"));
    if (!fs::exists(path)) throw ConfigError("panel file not found: " + path.string());
    return load_panel_file(path.string(), panel_kind(run));
}

void require_rank(const CellPanel& panel, const BasisSet& basis) {
    if (basis.target() != panel.kind())
        throw ConfigError("basis targets " + std::string(to_string(basis.target())) + " cells but the panel holds " +
                          to_string(panel.kind()) + " cells");
    if (!check_rank(basis, panel.cells()))
        throw ValidationError("basis design is rank deficient over the panel cells (need at least " +
                              std::to_string(basis.dim()) + " distinct, independent cells)");
}

EMConfig make_em_config(const Run& run) {
    const Section em = run.root().section("em");
    em.allow_only({"N", "Ntilde", "max_iters", "tail_window", "sampler", "pd_repair", "resampling"});
    EMConfig c;
    c.particles = em.positive_int("N", c.particles);
    c.backward_draws = em.positive_int("Ntilde", c.backward_draws);
    c.max_iters = em.positive_int("max_iters", c.max_iters);
    c.tail_window = em.positive_int("tail_window", std::min(c.tail_window, c.max_iters));
    c.seed = run.seed;
    c.sampler = choose(em, "sampler", c.sampler,
                       std::map<std::string, BackwardSampler>{{"direct", BackwardSampler::direct},
                                                              {"rejection", BackwardSampler::rejection},
                                                              {"expectation", BackwardSampler::expectation}});
    c.pd_repair = choose(em, "pd_repair", c.pd_repair,
                         std::map<std::string, PdRepair>{{"resample", PdRepair::resample},
                                                         {"numeric", PdRepair::numeric}});
    c.resampling = choose(em, "resampling", c.resampling,
                          std::map<std::string, Resampling>{{"multinomial", Resampling::multinomial},
                                                            {"systematic", Resampling::systematic}});
    try {
        c.validate();
    } catch (const UsageError& e) {
        throw ConfigError(std::string("config: em: ") + e.what());
    }
    return c;
}

FilterOptions make_filter_options(const Run& run) {
    const Section f = run.root().section("filter");
    f.allow_only({"N", "resampling"});
    FilterOptions o;
    o.particles = f.positive_int("N", run.root().section("em").positive_int("N", o.particles));
    o.resampling = choose(f, "resampling", o.resampling,
                          std::map<std::string, Resampling>{{"multinomial", Resampling::multinomial},
                                                            {"systematic", Resampling::systematic}});
    return o;
}

// Stream keys of the commands that use randomness; distinct per purpose.
RngKey filter_key(std::uint64_t seed) { return RngKey{seed, mix_stream_id(0xF117E2)}; }
RngKey forecast_key(std::uint64_t seed) { return RngKey{seed, mix_stream_id(0xF0CA57)}; }

LatentParams theta_input(Run& run, const char* config_key, bool required) {
    std::optional<fs::path> path = run.theta0_path;
    if (!path && run.root().has(config_key)) {
        const json& v = run.root().raw(config_key);
        if (v.is_object()) return theta_from_json(v);
        path = run.resolve(run.root().text(config_key, ""));
    }
    if (!path) {
        if (required) throw ConfigError(std::string("no parameters given: pass --theta0 or set '") + config_key + "'");
        return {};
    }
    if (!fs::exists(*path)) throw ConfigError("theta file not found: " + path->string());
    const LatentParams theta = load_theta_file(path->string());
    run.extra["theta_input"] = theta_to_json(theta);
    return theta;
}

void check_theta_dim(const LatentParams& theta, const BasisSet& basis) {
    if (theta.dim() != basis.dim())
        throw ConfigError("theta has dimension " + std::to_string(theta.dim()) + " but the basis has " +
                          std::to_string(basis.dim()));
}

void cmd_validate(Run& run) {
    const CellPanel panel = load_configured_panel(run);
    json report{{"kind", to_string(panel.kind())}, {"cells", panel.num_cells()}, {"periods", panel.periods()}};
    std::int64_t exposure = 0, events = 0;
    std::size_t missing = 0;
    for (std::size_t c = 0; c < panel.num_cells(); ++c)
        for (int t = 0; t < panel.periods(); ++t) {
            exposure += panel.exposure(c, t);
            events += panel.events(c, t);
            missing += panel.present(c, t) ? 0 : 1;
        }
    report["total_exposure"] = exposure;
    report["total_events"] = events;
    report["missing_rows"] = missing;
    bool ok = true;
    if (run.root().has("basis")) {
        const BasisSet basis = make_basis(run);
        const bool rank = basis.target() == panel.kind() && check_rank(basis, panel.cells());
        report["basis_dim"] = basis.dim();
        report["full_rank"] = rank;
        ok = rank;
    }
    report["ok"] = ok;
    run.write_json("validation.json", report);
    if (!ok) throw ValidationError("basis design is rank deficient over the panel cells");
}

TwoStepResult run_baseline(Run& run, const CellPanel& panel, const BasisSet& basis) {
    const YearlyFit fit = fit_yearly(panel, basis);
    run.write("yearly.csv", [&](std::ostream& o) { write_yearly_csv(o, fit); });
    TwoStepResult result{fit, {}, false};
    result.theta0 = estimate_theta0(fit, &result.jittered);
    json doc = theta_to_json(result.theta0);
    doc["jittered"] = result.jittered;
    run.write_json("theta0.json", doc);
    return result;
}

void cmd_baseline(Run& run) {
    const CellPanel panel = load_configured_panel(run);
    const BasisSet basis = make_basis(run);
    require_rank(panel, basis);
    run_baseline(run, panel, basis);
}

void cmd_fit(Run& run) {
    const CellPanel panel = load_configured_panel(run);
    const BasisSet basis = make_basis(run);
    require_rank(panel, basis);
    const EMConfig config = make_em_config(run);
    LatentParams theta0 = theta_input(run, "theta0", false);
    if (theta0.dim() == 0) theta0 = run_baseline(run, panel, basis).theta0;
    check_theta_dim(theta0, basis);
    require_valid(theta0);

    const DesignPanel design(panel, basis);
    const EMTrace trace = em_fit(design, theta0, config);
    run.write("trace.csv", [&](std::ostream& o) { write_trace_csv(o, trace); });
    run.write_json("theta_hat.json", theta_to_json(trace.final));

    FilterOptions options = make_filter_options(run);
    const FilterOutput filter = bootstrap_filter(design, trace.final, options, filter_key(run.seed));
    run.write("filter.csv", [&](std::ostream& o) { write_filter_csv(o, filter); });
}

void cmd_filter(Run& run) {
    const CellPanel panel = load_configured_panel(run);
    const BasisSet basis = make_basis(run);
    require_rank(panel, basis);
    const LatentParams theta = theta_input(run, "theta", true);
    check_theta_dim(theta, basis);
    const DesignPanel design(panel, basis);
    const FilterOutput filter = bootstrap_filter(design, theta, make_filter_options(run), filter_key(run.seed));
    run.write("filter.csv", [&](std::ostream& o) { write_filter_csv(o, filter); });
    run.write_json("filter_summary.json", json{{"loglik_estimate", filter.loglik_estimate}});
}

void cmd_forecast(Run& run) {
    const CellPanel panel = load_configured_panel(run);
    const BasisSet basis = make_basis(run);
    require_rank(panel, basis);
    const LatentParams theta = theta_input(run, "theta", true);
    check_theta_dim(theta, basis);
    const Section fc = run.root().section("forecast");
    fc.allow_only({"horizon", "paths", "probs", "seeding"});
    const int horizon = fc.positive_int("horizon", 5);
    const int paths = fc.positive_int("paths", 10000);
    const std::vector<double> probs = fc.reals("probs", {0.05, 0.5, 0.95});
    for (double q : probs)
        if (!(q > 0.0 && q < 1.0)) throw ConfigError("config: 'forecast.probs' must lie in (0, 1)");
    const auto seeding = choose(fc, "seeding", ForecastSeed::cloud,
                                std::map<std::string, ForecastSeed>{{"cloud", ForecastSeed::cloud},
                                                                    {"point_mass", ForecastSeed::point_mass}});

    const DesignPanel design(panel, basis);
    const FilterOutput filter = bootstrap_filter(design, theta, make_filter_options(run), filter_key(run.seed));
    const ForecastPaths future =
        simulate_future(theta, filter.clouds.back(), horizon, paths, forecast_key(run.seed), seeding);
    const RateSurface surface = rate_surface(future, basis, panel.cells(), probs);
    run.write("forecast.csv", [&](std::ostream& o) { write_forecast_csv(o, surface); });
}

std::vector<Cell> synth_cells(const Section& s, const BasisSet& basis) {
    std::vector<double> ages = s.reals("ages", {});
    if (ages.empty()) {
        const auto [lo, hi] = basis.age_range();
        for (int i = 0; i < 8; ++i) ages.push_back(std::round(lo + (hi - lo) * i / 7.0));
    }
    std::vector<Cell> cells;
    if (basis.target() == CellKind::inception) {
        for (double a : ages) cells.push_back(Cell::inception(static_cast<int>(a)));
        return cells;
    }
    std::vector<double> durations = s.reals("durations", {0.0, 0.5, 1.0, 2.0});
    const double width = s.real("duration_width", 0.5);
    for (double a : ages)
        for (double d : durations) cells.push_back(Cell::termination(static_cast<int>(a), d, width));
    return cells;
}

void cmd_synth(Run& run) {
    const BasisSet basis = make_basis(run);
    const Section s = run.root().section("synth");
    s.allow_only({"theta", "ages", "durations", "duration_width", "exposure", "periods", "replications"});
    if (!s.has("theta")) throw ConfigError("config: missing 'synth.theta'");
    LatentParams theta;
    if (run.theta0_path) {
        theta = theta_input(run, "theta", true);
    } else if (s.raw("theta").is_object()) {
        theta = theta_from_json(s.raw("theta"));
    } else {
        const fs::path path = run.resolve(s.text("theta", ""));
        if (!fs::exists(path)) throw ConfigError("theta file not found: " + path.string());
        theta = load_theta_file(path.string());
        run.extra["theta_input"] = theta_to_json(theta);
    }
    check_theta_dim(theta, basis);
    const std::vector<Cell> cells = synth_cells(s, basis);
    const int periods = s.positive_int("periods", 20);
    const std::int64_t exposure = s.count("exposure", 10000);
    const int replications = s.positive_int("replications", 1);
    const std::vector<std::vector<std::int64_t>> table(
        cells.size(), std::vector<std::int64_t>(static_cast<std::size_t>(periods), exposure));
    const auto study = replicate_study(theta, basis, cells, table, periods, replications, run.seed);
    for (std::size_t r = 0; r < study.size(); ++r) {
        const std::string suffix = replications == 1 ? "" : "_" + std::to_string(r + 1);
        run.write("panel" + suffix + ".csv", [&](std::ostream& o) { write_panel(o, study[r].panel); });
        run.write("path" + suffix + ".csv", [&](std::ostream& o) {
            o << "period,component,value\n";
            for (std::size_t t = 0; t < study[r].path.size(); ++t)
                for (Eigen::Index i = 0; i < study[r].path[t].size(); ++i)
                    o << (t + 1) << ',' << (i + 1) << ',' << format_real(study[r].path[t](i)) << '\n';
        });
    }
}

json versions() {
    return json{{"hmmrates", HMMRATES_VERSION},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"cli11", CLI11_VERSION}};
}

void write_manifest(Run& run) {
    std::vector<std::string> files = run.outputs;
    std::sort(files.begin(), files.end());
    json manifest{{"command", run.command},
                  {"seed", run.seed},
                  {"config_hash", hex64(fnv1a(run.config.dump()))},
                  {"versions", versions()},
                  {"config", run.config},
                  {"outputs", files}};
    for (auto it = run.extra.begin(); it != run.extra.end(); ++it) manifest[it.key()] = it.value();
    run.write_json("manifest.json", manifest);
}

json load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Disability transition rates: state-space fitting and forecasting", "hmmrates"};
    app.set_version_flag("--version", HMMRATES_VERSION);
    app.require_subcommand(1);

    std::string config_path, theta0_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    const std::map<std::string, std::string> commands{
        {"baseline", "Two-step fit: yearly estimates and the random-walk fit to them"},
        {"fit", "EM fit of the state-space model; exports the trace, estimate and filter table"},
        {"filter", "Particle filter summary table for given parameters"},
        {"forecast", "Quantile surfaces of future transition probabilities"},
        {"synth", "Generate synthetic panels from known parameters"},
        {"validate", "Check a panel (and optionally the basis rank)"},
    };
    std::string chosen;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--seed", seed, "Seed (overrides the config)");
        sub->add_option("--threads", threads, "Worker threads (results do not depend on it)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--theta0", theta0_path, "Parameter JSON (initial value for fit, input for filter/forecast)");
        sub->add_option("--out", out_dir, "Output directory");
        sub->callback([&chosen, name = name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return config_error;
    }

    Run run;
    run.command = chosen;
    try {
        const fs::path cfg(config_path);
        run.config = load_config(cfg);
        if (!run.config.is_object()) throw ConfigError("config must be a JSON object");
        Section(run.config, "").allow_only({"panel", "kind", "basis", "em", "filter", "forecast", "synth", "seed",
                                            "theta", "theta0", "outputs"});
        run.base_dir = cfg.has_parent_path() ? cfg.parent_path() : fs::path(".");
        if (seed) {
            run.config["seed"] = *seed;
        } else if (run.config.contains("seed")) {
            if (!run.config["seed"].is_number_unsigned())
                throw ConfigError("config: 'seed' must be a nonnegative integer");
        } else {
            run.config["seed"] = 1;
        }
        run.seed = run.config["seed"].get<std::uint64_t>();
        if (!theta0_path.empty()) run.theta0_path = fs::path(theta0_path);
        if (run.config.contains("outputs")) {
            const Section outputs = run.root().section("outputs");
            outputs.allow_only({"dir"});
            if (out_dir == "out" && outputs.has("dir")) out_dir = run.resolve(outputs.text("dir", "out")).string();
        }
        run.out_dir = fs::path(out_dir);
        std::error_code ec;
        fs::create_directories(run.out_dir, ec);
        if (ec) throw ConfigError("cannot create output directory " + out_dir + ": " + ec.message());
        set_num_threads(threads);

        if (chosen == "validate") cmd_validate(run);
        else if (chosen == "baseline") cmd_baseline(run);
        else if (chosen == "fit") cmd_fit(run);
        else if (chosen == "filter") cmd_filter(run);
        else if (chosen == "forecast") cmd_forecast(run);
        else if (chosen == "synth") cmd_synth(run);
        write_manifest(run);
        out << chosen << ": wrote " << run.outputs.size() << " files to " << run.out_dir.string() << '\n';
        return ok;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_error;
    } catch (const Error& e) {
        err << "invalid data: " << e.what() << '\n';
        return validation_error;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }
}

}  // namespace hmmrates::cli
