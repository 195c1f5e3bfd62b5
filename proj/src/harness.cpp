#include "cablp/harness.hpp"

#include "cablp/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace cablp {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) { return master ^ mix64(index); }

void ExperimentConfig::validate() const {
    if (horizons.empty()) throw ConfigError("at least one horizon is required");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (horizons[i] < 1) throw ConfigError("horizons must be positive");
        if (i > 0 && horizons[i] <= horizons[i - 1]) throw ConfigError("horizons must be strictly ascending");
    }
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw ConfigError("seeds must be distinct");
    if (!(oracle_resolution > 0.0)) throw ConfigError("oracle_resolution must be positive");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (!(inject_subspace_error >= 0.0) || inject_subspace_error > std::sqrt(2.0))
        throw ConfigError("inject.subspace_error must lie in [0, sqrt 2]");
    if (inject_subspace_error > 0.0 && environment.d <= environment.k)
        throw ConfigError("a corrupted subspace needs d > k");
    if (mode == RunMode::theory && !inject_true_subspace) {
        constants.validate();
        if (!(alpha > 0.0)) throw ConfigError("theory mode needs a declared alpha > 0");
    }
}

ExperimentConfig experiment_config_from_json(const Json& j) {
    ExperimentConfig cfg;
    try {
        cfg.environment = environment_descriptor_from_json(j.at("environment"));
        const std::string mode = j.value("mode", std::string("practical"));
        if (mode == "practical") cfg.mode = RunMode::practical;
        else if (mode == "theory") cfg.mode = RunMode::theory;
        else throw ConfigError("mode must be practical or theory");
        if (j.contains("practical")) cfg.practical = practical_plan_from_json(j.at("practical"));
        if (j.contains("constants")) cfg.constants = theory_constants_from_json(j.at("constants"));
        cfg.alpha = j.value("alpha", 0.0);
        cfg.horizons = j.at("horizons").get<std::vector<std::int64_t>>();
        if (j.contains("seeds")) {
            cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        } else {
            const int count = j.value("seed_count", 1);
            const auto master = j.value("master_seed", std::uint64_t{0});
            if (count < 1) throw ConfigError("seed_count must be >= 1");
            for (int i = 0; i < count; ++i) cfg.seeds.push_back(derive_seed(master, static_cast<std::uint64_t>(i)));
        }
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        cfg.oracle_resolution = j.value("oracle_resolution", cfg.oracle_resolution);
        if (j.contains("phase2")) cfg.phase2 = phase2_config_from_json(j.at("phase2"));
        if (j.contains("solver")) cfg.solver = solver_settings_from_json(j.at("solver"));
        if (j.contains("inject")) {
            const Json& inj = j.at("inject");
            cfg.inject_true_subspace = inj.value("true_subspace", false);
            cfg.inject_subspace_error = inj.value("subspace_error", 0.0);
            if (cfg.inject_subspace_error > 0.0) cfg.inject_true_subspace = true;
        }
        cfg.write_traces = j.value("write_traces", false);
        cfg.threads = j.value("threads", 1);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
    Json j;
    j["environment"] = to_json(cfg.environment);
    j["mode"] = std::string(to_string(cfg.mode));
    const PracticalPlan& p = cfg.practical;
    j["practical"] = {{"m_x", p.m_x},
                      {"m_phi", p.m_phi},
                      {"N", p.n_resample},
                      {"epsilon", p.epsilon},
                      {"lambda_rule", std::string(to_string(p.lambda_rule))},
                      {"lambda", p.lambda_value}};
    const TheoryConstants& c = cfg.constants;
    j["constants"] = {{"delta", c.delta}, {"rho", c.rho},   {"p", c.p},          {"c1", c.c1},
                      {"gamma", c.gamma}, {"C0", c.c0},     {"C_prime", c.c_prime},
                      {"f_exponent_mode", c.f_mode == FExponentMode::standard ? "standard" : "remark"},
                      {"epsilon_rule", c.epsilon_rule == EpsilonRule::midpoint ? "midpoint" : "geometric"}};
    j["alpha"] = cfg.alpha;
    j["horizons"] = cfg.horizons;
    j["seeds"] = cfg.seeds;
    j["out_dir"] = cfg.out_dir;
    j["oracle_resolution"] = cfg.oracle_resolution;
    j["phase2"] = {{"exploration", cfg.phase2.scale_rule == ExplorationScale::noise_only ? "noise_only" : "conservative"},
                   {"scale", cfg.phase2.scale_override},
                   {"M", cfg.phase2.m_override},
                   {"multi_epoch", cfg.phase2.multi_epoch}};
    j["solver"] = {{"max_iters", cfg.solver.max_iters},
                   {"rel_tol", cfg.solver.rel_tol},
                   {"stage_rel_tol", cfg.solver.stage_rel_tol},
                   {"feas_tol", cfg.solver.feas_tol},
                   {"continuation", cfg.solver.continuation}};
    j["inject"] = {{"true_subspace", cfg.inject_true_subspace}, {"subspace_error", cfg.inject_subspace_error}};
    j["write_traces"] = cfg.write_traces;
    j["threads"] = cfg.threads;
    return j;
}

CellResult run_cell(const ExperimentConfig& cfg, std::int64_t n, std::uint64_t seed, RunRecord* record) {
    CellResult cell;
    cell.n = n;
    cell.seed = seed;

    Environment env = make_environment(cfg.environment, seed);
    RunConfig rc;
    rc.mode = cfg.mode;
    rc.n = n;
    rc.constants = cfg.constants;
    rc.alpha = cfg.alpha;
    rc.practical = cfg.practical;
    rc.oracle_resolution = cfg.oracle_resolution;
    rc.phase2 = cfg.phase2;
    rc.solver = cfg.solver;
    rc.sampling_seed = derive_seed(seed, 1);
    if (cfg.inject_true_subspace) {
        if (cfg.inject_subspace_error > 0.0) {
            std::mt19937_64 rng(derive_seed(seed, 2));
            rc.injected_a_hat = corrupt_subspace(env.param_matrix(), cfg.inject_subspace_error, rng);
        } else {
            rc.injected_a_hat = env.param_matrix();
        }
    }

    try {
        RunRecord rec = run_cablp(env, rc);
        cell.status = rec.status;
        cell.message = rec.message;
        cell.r_total = rec.total_regret;
        cell.r1 = rec.r1;
        cell.r2 = rec.r2;
        cell.r3 = rec.r3;
        cell.subspace_err = rec.subspace_err;
        cell.n1 = rec.phase1_rounds;
        if (record != nullptr) *record = std::move(rec);
    } catch (const PlanError& e) {
        cell.status = "infeasible";
        cell.message = e.what();
    } catch (const DomainError& e) {
        cell.status = "infeasible";
        cell.message = e.what();
    }
    if (cell.status != "ok") {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (cell.status == "infeasible") cell.r_total = cell.r1 = cell.r2 = cell.r3 = cell.subspace_err = nan;
    }
    return cell;
}

namespace {

std::filesystem::path run_file(const std::filesystem::path& dir, std::int64_t n, std::uint64_t seed,
                               const char* ext) {
    std::ostringstream os;
    os << "run_n" << n << "_s" << seed << ext;
    return dir / os.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot open " + p.string() + " for writing");
    out << text;
    if (!out) throw Error("write failed: " + p.string());
}

} // namespace

SweepSummary run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::filesystem::path out_dir(cfg.out_dir);
    const std::filesystem::path runs_dir = out_dir / "runs";
    std::filesystem::create_directories(runs_dir);

    std::vector<std::pair<std::int64_t, std::uint64_t>> jobs;
    for (auto n : cfg.horizons)
        for (auto s : cfg.seeds) jobs.emplace_back(n, s);
    std::vector<CellResult> cells(jobs.size());

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                const auto [n, seed] = jobs[i];
                RunRecord rec;
                cells[i] = run_cell(cfg, n, seed, &rec);
                Json j;
                if (cells[i].status == "infeasible") {
                    j = {{"status", cells[i].status}, {"message", cells[i].message}, {"n", n}, {"env_seed", seed}};
                } else {
                    j = to_json(rec, false);
                }
                write_text(run_file(runs_dir, n, seed, ".json"), j.dump(2) + "\n");
                if (cfg.write_traces && cells[i].status != "infeasible") {
                    std::ostringstream os;
                    write_trace_csv(os, rec, cfg.environment.k);
                    write_text(run_file(runs_dir, n, seed, ".csv"), os.str());
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                next = jobs.size();
                return;
            }
        }
    };
    const int n_threads = std::min<int>(cfg.threads, static_cast<int>(jobs.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    SweepSummary summary = summarize(cells);
    std::ostringstream csv;
    write_sweep_csv(csv, summary.cells);
    write_text(out_dir / "sweep.csv", csv.str());
    write_text(out_dir / "summary.json", to_json(summary).dump(2) + "\n");
    return summary;
}

SweepSummary summarize(std::vector<CellResult> cells) {
    SweepSummary s;
    std::map<std::int64_t, std::vector<const CellResult*>> by_n;
    for (const auto& c : cells) by_n[c.n].push_back(&c);

    for (const auto& [n, group] : by_n) {
        AggregatePoint a;
        a.n = n;
        std::vector<const CellResult*> ok;
        for (const auto* c : group) {
            if (c->status == "ok") ok.push_back(c);
            else ++a.failed;
        }
        a.runs = static_cast<int>(ok.size());
        s.failed_cells += a.failed;
        if (ok.empty()) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            a.mean_r = a.se_r = a.mean_r1 = a.mean_r2 = a.mean_r3 = a.mean_subspace_err = nan;
        } else {
            for (const auto* c : ok) {
                a.mean_r += c->r_total;
                a.mean_r1 += c->r1;
                a.mean_r2 += c->r2;
                a.mean_r3 += c->r3;
                a.mean_subspace_err += c->subspace_err;
            }
            const double runs = a.runs;
            a.mean_r /= runs;
            a.mean_r1 /= runs;
            a.mean_r2 /= runs;
            a.mean_r3 /= runs;
            a.mean_subspace_err /= runs;
            if (a.runs > 1) {
                double ss = 0.0;
                for (const auto* c : ok) ss += (c->r_total - a.mean_r) * (c->r_total - a.mean_r);
                a.se_r = std::sqrt(ss / (runs - 1.0)) / std::sqrt(runs);
            }
        }
        s.aggregates.push_back(a);
    }

    std::vector<std::pair<double, double>> pts;
    for (const auto& a : s.aggregates)
        if (a.runs > 0 && a.mean_r > 0.0) pts.emplace_back(static_cast<double>(a.n), a.mean_r);
    if (pts.size() >= 3) s.fit = fit_regret_exponent(pts);
    s.cells = std::move(cells);
    return s;
}

ExponentFit fit_regret_exponent(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw ConfigError("exponent fit needs at least 3 points");
    std::vector<double> xs, ys;
    for (const auto& [n, r] : points) {
        if (!(n > 0.0) || !(r > 0.0)) throw DomainError("exponent fit needs positive n and R(n)");
        xs.push_back(std::log(n));
        ys.push_back(std::log(r));
    }
    const double cnt = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= cnt;
    my /= cnt;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("exponent fit needs at least two distinct horizons");
    ExponentFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (f.intercept + f.slope * xs[i]);
        sse += e * e;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return f;
}

void write_sweep_csv(std::ostream& os, const std::vector<CellResult>& cells) {
    os << sweep_csv_header << '\n';
    for (const auto& c : cells) {
        os << c.n << ',' << c.seed << ',' << c.status << ',' << format_double(c.r_total) << ','
           << format_double(c.r1) << ',' << format_double(c.r2) << ',' << format_double(c.r3) << ','
           << format_double(c.subspace_err) << ',' << c.n1 << '\n';
    }
}

namespace {

double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("bad number in CSV: " + s);
    return v;
}

template <class T>
T parse_int(const std::string& s) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("bad integer in CSV: " + s);
    return v;
}

} // namespace

std::vector<CellResult> read_sweep_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty sweep CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != sweep_csv_header) throw ConfigError("unexpected sweep CSV header: " + line);
    std::vector<CellResult> cells;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 9) throw ConfigError("sweep CSV row needs 9 fields: " + line);
        CellResult c;
        c.n = parse_int<std::int64_t>(f[0]);
        c.seed = parse_int<std::uint64_t>(f[1]);
        c.status = f[2];
        c.r_total = parse_double(f[3]);
        c.r1 = parse_double(f[4]);
        c.r2 = parse_double(f[5]);
        c.r3 = parse_double(f[6]);
        c.subspace_err = parse_double(f[7]);
        c.n1 = parse_int<std::int64_t>(f[8]);
        cells.push_back(std::move(c));
    }
    return cells;
}

namespace {

Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double num_from(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

} // namespace

Json to_json(const SweepSummary& s) {
    Json j;
    Json aggs = Json::array();
    for (const auto& a : s.aggregates) {
        aggs.push_back({{"n", a.n},
                        {"runs", a.runs},
                        {"failed", a.failed},
                        {"mean_R", num(a.mean_r)},
                        {"se_R", num(a.se_r)},
                        {"mean_R1", num(a.mean_r1)},
                        {"mean_R2", num(a.mean_r2)},
                        {"mean_R3", num(a.mean_r3)},
                        {"mean_subspace_err", num(a.mean_subspace_err)}});
    }
    j["aggregates"] = aggs;
    j["failed_cells"] = s.failed_cells;
    j["cells"] = s.cells.size();
    if (s.fit) j["fit"] = {{"slope", s.fit->slope}, {"intercept", s.fit->intercept}, {"r2", s.fit->r2}};
    else j["fit"] = nullptr;
    return j;
}

SweepSummary sweep_summary_from_json(const Json& j) {
    SweepSummary s;
    try {
        for (const auto& a : j.at("aggregates")) {
            AggregatePoint p;
            p.n = a.at("n").get<std::int64_t>();
            p.runs = a.at("runs").get<int>();
            p.failed = a.value("failed", 0);
            p.mean_r = num_from(a.at("mean_R"));
            p.se_r = num_from(a.at("se_R"));
            p.mean_r1 = num_from(a.at("mean_R1"));
            p.mean_r2 = num_from(a.at("mean_R2"));
            p.mean_r3 = num_from(a.at("mean_R3"));
            p.mean_subspace_err = num_from(a.at("mean_subspace_err"));
            s.aggregates.push_back(p);
        }
        s.failed_cells = j.value("failed_cells", 0);
        if (j.contains("fit") && !j.at("fit").is_null()) {
            const Json& f = j.at("fit");
            s.fit = ExponentFit{f.at("slope").get<double>(), f.at("intercept").get<double>(), f.at("r2").get<double>()};
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("summary: ") + e.what());
    }
    return s;
}

void emit_plot_data(const SweepSummary& summary, const std::filesystem::path& stem) {
    std::vector<const AggregatePoint*> pts;
    for (const auto& a : summary.aggregates)
        if (a.runs > 0 && a.mean_r > 0.0 && a.n > 0) pts.push_back(&a);
    if (pts.empty()) throw Error("no data");

    if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
    {
        std::ostringstream csv;
        csv << "n,runs,failed,mean_R,se_R,mean_R1,mean_R2,mean_R3,mean_subspace_err\n";
        for (const auto& a : summary.aggregates) {
            csv << a.n << ',' << a.runs << ',' << a.failed << ',' << format_double(a.mean_r) << ','
                << format_double(a.se_r) << ',' << format_double(a.mean_r1) << ',' << format_double(a.mean_r2)
                << ',' << format_double(a.mean_r3) << ',' << format_double(a.mean_subspace_err) << '\n';
        }
        write_text(std::filesystem::path(stem.string() + ".csv"), csv.str());
    }

    // Axis bounds in log10 space, padded by 10% of the span on each side.
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto* a : pts) {
        const double lx = std::log10(static_cast<double>(a->n));
        x_lo = std::min(x_lo, lx);
        x_hi = std::max(x_hi, lx);
        const double top = a->mean_r + (std::isfinite(a->se_r) ? a->se_r : 0.0);
        const double bot = a->mean_r - (std::isfinite(a->se_r) ? a->se_r : 0.0);
        y_hi = std::max(y_hi, std::log10(top));
        y_lo = std::min(y_lo, std::log10(bot > 0.0 ? bot : a->mean_r));
    }
    auto pad = [](double& lo, double& hi) {
        double span = hi - lo;
        if (!(span > 0.0)) {
            lo -= 0.5;
            hi += 0.5;
            span = 1.0;
        }
        lo -= 0.1 * span;
        hi += 0.1 * span;
    };
    pad(x_lo, x_hi);
    pad(y_lo, y_hi);

    constexpr double width = 640, height = 480, left = 80, right = 20, top = 30, bottom = 60;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double lx) { return left + (lx - x_lo) / (x_hi - x_lo) * pw; };
    auto py = [&](double ly) { return top + (y_hi - ly) / (y_hi - y_lo) * ph; };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" data-log10-x-min=\"" << format_double(x_lo)
        << "\" data-log10-x-max=\"" << format_double(x_hi) << "\" data-log10-y-min=\"" << format_double(y_lo)
        << "\" data-log10-y-max=\"" << format_double(y_hi) << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
        << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int e = static_cast<int>(std::ceil(x_lo)); e <= static_cast<int>(std::floor(x_hi)); ++e) {
        svg << "<line x1=\"" << px(e) << "\" y1=\"" << top + ph << "\" x2=\"" << px(e) << "\" y2=\"" << top + ph + 5
            << "\" stroke=\"black\"/>\n<text x=\"" << px(e) << "\" y=\"" << top + ph + 20
            << "\" font-size=\"12\" text-anchor=\"middle\">1e" << e << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(y_lo)); e <= static_cast<int>(std::floor(y_hi)); ++e) {
        svg << "<line x1=\"" << left - 5 << "\" y1=\"" << py(e) << "\" x2=\"" << left << "\" y2=\"" << py(e)
            << "\" stroke=\"black\"/>\n<text x=\"" << left - 8 << "\" y=\"" << py(e) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15
        << "\" font-size=\"14\" text-anchor=\"middle\">horizon n</text>\n"
        << "<text x=\"20\" y=\"" << top + ph / 2 << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << top + ph / 2 << ")\">mean regret R(n)</text>\n";

    for (const auto* a : pts) {
        const double x = px(std::log10(static_cast<double>(a->n)));
        const double se = std::isfinite(a->se_r) ? a->se_r : 0.0;
        if (se > 0.0) {
            const double lo = a->mean_r - se > 0.0 ? a->mean_r - se : a->mean_r;
            svg << "<line class=\"errorbar\" x1=\"" << x << "\" y1=\"" << py(std::log10(a->mean_r + se)) << "\" x2=\""
                << x << "\" y2=\"" << py(std::log10(lo)) << "\" stroke=\"black\"/>\n";
        }
        svg << "<circle class=\"marker\" cx=\"" << x << "\" cy=\"" << py(std::log10(a->mean_r))
            << "\" r=\"4\" fill=\"steelblue\"/>\n";
    }

    if (summary.fit) {
        const ExponentFit& f = *summary.fit;
        auto ly = [&](double lx) { return (f.intercept + f.slope * lx * std::log(10.0)) / std::log(10.0); };
        const double lx0 = std::log10(static_cast<double>(pts.front()->n));
        const double lx1 = std::log10(static_cast<double>(pts.back()->n));
        svg << "<line class=\"fit\" x1=\"" << px(lx0) << "\" y1=\"" << py(ly(lx0)) << "\" x2=\"" << px(lx1)
            << "\" y2=\"" << py(ly(lx1)) << "\" stroke=\"firebrick\" stroke-dasharray=\"6 4\"/>\n"
            << "<text class=\"fit-label\" x=\"" << left + 10 << "\" y=\"" << top + 20
            << "\" font-size=\"13\" fill=\"firebrick\">slope " << format_double(std::round(f.slope * 1e4) / 1e4)
            << ", r2 " << format_double(std::round(f.r2 * 1e4) / 1e4) << "</text>\n";
    }
    svg << "</svg>\n";
    write_text(std::filesystem::path(stem.string() + ".svg"), svg.str());
}

} // namespace cablp
