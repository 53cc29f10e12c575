#include "refine.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <unistd.h>
#include <fstream>
#include <random>
#include <thread>

#include "diag.hpp"
#include "drh.hpp"
#include "numio.hpp"
#include "solver_client.hpp"

namespace featkit {

namespace fs = std::filesystem;

void RefineSettings::check() const {
    if (K < 0) fail_input("K must be nonnegative");
    if (!(eps > 0)) fail_input("eps must be positive");
    if (!(time_horizon > 0)) fail_input("time_horizon must be positive");
    if (sample_budget < 0) fail_input("sample_budget must be nonnegative");
    if (!(precision > 0)) fail_input("precision must be positive");
}

// ============================================================================
// Oracle session
// ============================================================================

struct FeasibilityOracle::Impl {
    const ProductModel& pm;
    CompiledModel cm;
    SimSettings sim;
    RefineSettings rs;
    Side side = Side::Any;
    int call_count = 0;
    int query_count = 0;

    std::mt19937_64 rng;
    IBox init_box;

    // Sample pool: accepted runs found so far, identified by their start
    // point and stage policy (witness traces are re-simulated on demand).
    struct PoolEntry {
        Valuation start;
        SimPolicy policy;
        double feat = 0.0;
    };
    std::vector<PoolEntry> pool;
    bool pool_seeded = false;

    std::optional<ReachSets> pipe;
    FeatureRange hull;
    bool hull_ready = false;

    Impl(const ProductModel& p, const SimSettings& s, const RefineSettings& r)
        : pm(p), cm(compile_model(p)), sim(s), rs(r), rng(r.seed) {
        sim.horizon = rs.time_horizon;
        sim.max_jumps = rs.K;
        init_box = initial_box(cm);
    }

    const FeatureRange& reach_hull() {
        if (!hull_ready) {
            pipe = flowpipe(cm, sim);
            hull = feature_range_of(*pipe, cm);
            hull_ready = true;
        }
        return hull;
    }

    Valuation start_from(const std::vector<double>& point) const {
        Valuation v;
        v.mode = pm.automaton.initial_location;
        for (size_t i = 0; i < cm.vars.size(); ++i) v.values[cm.vars[i]] = point[i];
        return v;
    }

    SimPolicy random_policy() {
        SimPolicy pol;
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (int k = 0; k < pm.stage_count; ++k) {
            StagePolicy sp;
            if (u01(rng) < 0.5) sp.delay = u01(rng) * 0.5 * rs.time_horizon;
            if (u01(rng) < 0.3) sp.skip_events = static_cast<int>(u01(rng) * 3);
            pol.stages.push_back(sp);
        }
        return pol;
    }

    void try_sample(const Valuation& start, const SimPolicy& pol) {
        SimResult res = simulate(cm, start, sim, pol);
        if (res.accepted) pool.push_back({start, pol, res.feat_value});
    }

    std::vector<double> random_point() {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::vector<double> p(init_box.size());
        for (size_t i = 0; i < p.size(); ++i)
            p[i] = init_box[i].lo + u01(rng) * init_box[i].width();
        return p;
    }

    void seed_pool() {
        if (pool_seeded) return;
        pool_seeded = true;
        // Centre and per-dimension corners with the eager policy first.
        std::vector<double> mid(init_box.size());
        for (size_t i = 0; i < mid.size(); ++i) mid[i] = init_box[i].mid();
        try_sample(start_from(mid), {});
        for (size_t i = 0; i < init_box.size() && i < 8; ++i) {
            if (init_box[i].width() <= 0) continue;
            for (double end : {init_box[i].lo, init_box[i].hi}) {
                std::vector<double> p = mid;
                p[i] = end;
                try_sample(start_from(p), {});
            }
        }
    }

    /// Draws up to the per-query budget of new samples, half random, half
    /// perturbations of the pool entry closest to the query interval.
    void grow_pool(double a, double b) {
        if (rs.sample_budget <= 0) return;  // a zero budget means no sampling at all
        seed_pool();
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        int budget = rs.sample_budget;
        for (int n = 0; n < budget; ++n) {
            if (find_hit(a, b) >= 0) return;
            bool perturb = !pool.empty() && n % 2 == 1;
            if (!perturb) {
                try_sample(start_from(random_point()), random_policy());
                continue;
            }
            // Perturb the nearest entry toward the interval.
            int best = nearest(a, b);
            PoolEntry e = pool[best];
            Valuation start = e.start;
            for (size_t i = 0; i < cm.vars.size(); ++i) {
                double w = init_box[i].width();
                if (w <= 0) continue;
                double& v = start.values[cm.vars[i]];
                v += (u01(rng) - 0.5) * 0.2 * w;
                v = std::clamp(v, init_box[i].lo, init_box[i].hi);
            }
            SimPolicy pol = e.policy;
            for (auto& sp : pol.stages) {
                sp.delay = std::max(0.0, sp.delay + (u01(rng) - 0.5) * 4.0 * sim.step);
            }
            try_sample(start, pol);
        }
    }

    int nearest(double a, double b) const {
        int best = -1;
        double best_d = 1e300;
        for (size_t i = 0; i < pool.size(); ++i) {
            double d = pool[i].feat < a ? a - pool[i].feat
                                        : (pool[i].feat > b ? pool[i].feat - b : 0.0);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        return best;
    }

    /// Pool entry inside [a, b], extremal toward the preferred side.
    int find_hit(double a, double b) const {
        int best = -1;
        for (size_t i = 0; i < pool.size(); ++i) {
            if (pool[i].feat < a || pool[i].feat > b) continue;
            if (best < 0) {
                best = static_cast<int>(i);
                continue;
            }
            bool better = side == Side::High ? pool[i].feat > pool[best].feat
                                             : pool[i].feat < pool[best].feat;
            if (side == Side::Any) better = false;
            if (better) best = static_cast<int>(i);
        }
        return best;
    }

    Feasibility builtin_query(double a, double b) {
        Feasibility out;
        const FeatureRange& h = reach_hull();
        if (h.empty || b < h.lo || a > h.hi) {
            out.verdict = Verdict::Unsat;
            return out;
        }
        grow_pool(a, b);
        int hit = find_hit(a, b);
        if (hit >= 0) {
            SimResult res = simulate(cm, pool[hit].start, sim, pool[hit].policy);
            out.verdict = Verdict::Sat;
            out.witness = std::move(res.trace);
            out.witness_value = res.feat_value;
            return out;
        }
        out.verdict = Verdict::Unknown;
        return out;
    }

    Feasibility external_query(double a, double b) {
        if (rs.solver_path.empty())
            fail_external(
                "external oracle requested but no solver is configured (set the 'solver' key in "
                "the configuration file)");
        if (::access(rs.solver_path.c_str(), X_OK) != 0)
            fail_external("solver not found or not executable: " + rs.solver_path +
                          " (check the 'solver' key in the configuration file)");

        fs::path dir = rs.query_dir.empty() ? fs::path(".") : fs::path(rs.query_dir);
        dir /= "query_" + std::to_string(++query_count);
        fs::create_directories(dir);

        reach_hull();  // ensures the flowpipe exists for range derivation
        IBox ranges = init_box;
        for (const auto& per_loc : pipe->hulls) {
            for (const auto& slot : per_loc) {
                if (!slot) continue;
                for (size_t vi = 0; vi < ranges.size(); ++vi)
                    ranges[vi] = ranges[vi].hull((*slot)[vi]);
            }
        }
        std::string drh = emit_drh(pm, cm, ranges, a, b, rs.time_horizon);
        fs::path model_path = dir / "model.drh";
        {
            std::ofstream out(model_path);
            out << drh;
        }

        SolverInvocation inv;
        inv.solver_path = rs.solver_path;
        inv.args = {"-k", std::to_string(rs.K), "--precision", format_double(rs.precision),
                    "model.drh"};
        inv.workdir = dir.string();
        inv.timeout_seconds = rs.solver_timeout;
        SolverOutcome res = run_solver(inv);
        if (res.timed_out) fail_external("solver timeout after " +
                                         format_double(rs.solver_timeout) + "s");

        Feasibility out;
        if (res.exit_code == rs.solver_unsat_exit) {
            out.verdict = Verdict::Unsat;
            return out;
        }
        if (res.exit_code != rs.solver_sat_exit)
            fail_external("malformed solver output: unexpected exit code " +
                          std::to_string(res.exit_code) +
                          " (configure solver_sat_exit/solver_unsat_exit)");

        // SAT: pick up the newest JSON trace the solver left behind.
        fs::path trace_path;
        fs::file_time_type newest{};
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() != ".json") continue;
            if (trace_path.empty() || entry.last_write_time() > newest) {
                trace_path = entry.path();
                newest = entry.last_write_time();
            }
        }
        if (trace_path.empty())
            fail_external("malformed solver output: SAT verdict without a JSON trace in " +
                          dir.string());
        std::ifstream in(trace_path);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        Trace tr = parse_solver_trace(text);
        out.verdict = Verdict::Sat;
        // Witness value: the feature variable at the last non-null step.
        int fv = tr.var_index(pm.feat_var);
        for (auto it = tr.steps.rbegin(); it != tr.steps.rend(); ++it) {
            if (it->is_null || it->samples.empty()) continue;
            if (fv >= 0) out.witness_value = it->samples.back().values[fv];
            break;
        }
        out.witness = std::move(tr);
        if (!out.witness_value)
            fail_external("malformed solver output: trace misses the feature variable '" +
                          pm.feat_var + "'");
        return out;
    }

    Feasibility query(double a, double b) {
        if (a > b) fail_input("infeasible query: lower bound exceeds upper bound");
        ++call_count;
        switch (rs.oracle) {
            case OracleKind::Builtin:
                return builtin_query(a, b);
            case OracleKind::External:
                return external_query(a, b);
            case OracleKind::Hybrid: {
                Feasibility r = builtin_query(a, b);
                if (r.verdict != Verdict::Unknown || rs.solver_path.empty()) return r;
                return external_query(a, b);
            }
        }
        return {};
    }
};

FeasibilityOracle::FeasibilityOracle(const ProductModel& pm, const SimSettings& sim,
                                     const RefineSettings& rs)
    : impl_(std::make_unique<Impl>(pm, sim, rs)) {
    rs.check();
    sim.check();
}

FeasibilityOracle::~FeasibilityOracle() = default;

Feasibility FeasibilityOracle::feasible(double a, double b) { return impl_->query(a, b); }

void FeasibilityOracle::set_preferred_side(Side s) { impl_->side = s; }

int FeasibilityOracle::calls() const { return impl_->call_count; }

const FeatureRange& FeasibilityOracle::reach_hull() { return impl_->reach_hull(); }

Feasibility feasible(const ProductModel& pm, double a, double b, const RefineSettings& rs,
                     const SimSettings& sim) {
    FeasibilityOracle oracle(pm, sim, rs);
    return oracle.feasible(a, b);
}

// ============================================================================
// Corner refinement
// ============================================================================

namespace {

CornerResult refine_corner_with(FeasibilityOracle& oracle, const FeatureRange& range, Side side,
                                double eps) {
    CornerResult out;
    double lo = range.lo, hi = range.hi;
    double width = hi - lo;
    out.value = side == Side::Low ? lo : hi;
    if (width <= 0.0) {
        out.converged = true;  // degenerate range: nothing to search
        return out;
    }

    oracle.set_preferred_side(side);
    Feasibility first = oracle.feasible(lo, hi);
    out.calls++;
    if (first.verdict != Verdict::Sat) return out;  // refinement failure

    double best = std::clamp(*first.witness_value, lo, hi);
    out.witness = std::move(first.witness);
    out.witness_value = best;

    int max_loop = static_cast<int>(std::ceil(std::log2(std::max(2.0, width / eps)))) + 1;
    int loop_calls = 0;
    if (side == Side::Low) {
        while (best - lo > eps && loop_calls < max_loop) {
            double mid = 0.5 * (lo + best);
            Feasibility r = oracle.feasible(lo, mid);
            out.calls++;
            loop_calls++;
            if (r.verdict == Verdict::Sat) {
                double v = std::clamp(*r.witness_value, lo, best);
                best = v;
                out.witness = std::move(r.witness);
                out.witness_value = v;
            } else if (r.verdict == Verdict::Unsat) {
                lo = mid;
            } else {
                break;
            }
        }
        out.value = lo;
        out.converged = best - lo <= eps;
    } else {
        while (hi - best > eps && loop_calls < max_loop) {
            double mid = 0.5 * (best + hi);
            Feasibility r = oracle.feasible(mid, hi);
            out.calls++;
            loop_calls++;
            if (r.verdict == Verdict::Sat) {
                double v = std::clamp(*r.witness_value, best, hi);
                best = v;
                out.witness = std::move(r.witness);
                out.witness_value = v;
            } else if (r.verdict == Verdict::Unsat) {
                hi = mid;
            } else {
                break;
            }
        }
        out.value = hi;
        out.converged = hi - best <= eps;
    }
    return out;
}

}  // namespace

CornerResult refine_corner(const ProductModel& pm, const FeatureRange& range, Side side,
                           const RefineSettings& rs, const SimSettings& sim) {
    if (range.empty) fail_input("cannot refine an empty feature range");
    rs.check();
    FeasibilityOracle oracle(pm, sim, rs);
    return refine_corner_with(oracle, range, side, rs.eps);
}

RefinedRange refine_range(const ProductModel& pm, const FeatureRange& range,
                          const RefineSettings& rs, const SimSettings& sim) {
    if (range.empty) fail_input("cannot refine an empty feature range");
    rs.check();

    RefinedRange out;
    out.lo_star = range.lo;
    out.hi_star = range.hi;

    CornerResult lo_res, hi_res;
    std::exception_ptr lo_err, hi_err;

    // The two corners run concurrently, each with its own oracle session
    // (and, in external mode, its own query directories).
    auto run_side = [&](Side side, CornerResult& res, std::exception_ptr& err,
                        const std::string& subdir) {
        try {
            RefineSettings mine = rs;
            if (!rs.query_dir.empty()) mine.query_dir = rs.query_dir + "/" + subdir;
            mine.seed = rs.seed + (side == Side::High ? 0x9e3779b9ULL : 0);
            FeasibilityOracle oracle(pm, sim, mine);
            res = refine_corner_with(oracle, range, side, mine.eps);
        } catch (...) {
            err = std::current_exception();
        }
    };

    std::thread lo_thread(run_side, Side::Low, std::ref(lo_res), std::ref(lo_err), "low");
    run_side(Side::High, hi_res, hi_err, "high");
    lo_thread.join();
    if (lo_err) std::rethrow_exception(lo_err);
    if (hi_err) std::rethrow_exception(hi_err);

    out.iterations = lo_res.calls + hi_res.calls;
    out.lo_converged = lo_res.converged;
    out.hi_converged = hi_res.converged;

    if (!lo_res.witness && !hi_res.witness && range.width() > 0.0) {
        out.failed = true;  // no witness obtainable anywhere in the range
        return out;
    }

    out.lo_star = lo_res.value;
    out.hi_star = hi_res.value;
    out.lo_witness = std::move(lo_res.witness);
    out.hi_witness = std::move(hi_res.witness);
    out.lo_witness_value = lo_res.witness_value;
    out.hi_witness_value = hi_res.witness_value;
    return out;
}

}  // namespace featkit
