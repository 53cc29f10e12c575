#include "flowpipe.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "diag.hpp"
#include "numio.hpp"

namespace featkit {

namespace {

constexpr long kWorkBudget = 2000000;

struct Thread {
    int loc;
    int k;      // wall-clock step index of the entry box
    IBox box;   // endpoint box at entry
    int depth;  // jumps taken so far
};

struct Memo {
    IBox box;
    int spread = 0;
};

struct PipeRunner {
    const CompiledModel& cm;
    SimSettings s;
    ReachSets rs;
    int dims;
    std::vector<AffineStep> step_maps;                   // per location, for s.step
    std::vector<std::vector<std::optional<Memo>>> acc;   // subsumption memo
    std::vector<std::deque<Thread>> pools;

    PipeRunner(const CompiledModel& model, const SimSettings& settings)
        : cm(model), s(settings), dims(static_cast<int>(model.vars.size())) {
        rs.step = s.step;
        rs.horizon = s.horizon;
        rs.steps = static_cast<int>(std::ceil(s.horizon / s.step));
        rs.max_jumps = s.max_jumps;
        rs.vars = cm.vars;
        for (const auto& l : cm.pm->automaton.locations) rs.locations.push_back(l.name);
        rs.hulls.assign(cm.locs.size(),
                        std::vector<std::optional<IBox>>(rs.steps + 2, std::nullopt));
        acc.assign(cm.locs.size(),
                   std::vector<std::optional<Memo>>(rs.steps + 2, std::nullopt));
        step_maps.reserve(cm.locs.size());
        for (const auto& l : cm.locs) step_maps.push_back(affine_step(l.A, l.b, s.step));
        pools.resize(static_cast<size_t>(s.max_jumps) + 2);
    }

    static bool subset(const IBox& a, const IBox& b) {
        for (size_t i = 0; i < a.size(); ++i)
            if (a[i].lo < b[i].lo || a[i].hi > b[i].hi) return false;
        return true;
    }

    /// A spawned thread's wall-clock anchor can lag the real entry time by
    /// up to one step per jump taken, so records are smeared forward by the
    /// thread's depth (plus one for the within-step hull itself).
    void record(int loc, int k, const IBox& box, int depth) {
        int last = std::min(k + 1 + depth, rs.steps + 1);
        for (int w = k; w <= last; ++w) {
            auto& slot = rs.hulls[loc][w];
            slot = slot ? hull(*slot, box) : box;
        }
    }

    /// Per-dimension second-derivative bound times step^2, plus numeric slop.
    IBox bloat(const CompiledLoc& l, IBox S) const {
        IBox d1 = derivative_range(l.A, l.b, S);
        std::vector<double> zero(dims, 0.0);
        IBox d2 = affine_image(l.A, zero, d1);
        for (int i = 0; i < dims; ++i) {
            double m = std::max(std::abs(d2[i].lo), std::abs(d2[i].hi));
            double r = s.step * s.step * m + 1e-12 * (1.0 + std::abs(S[i].lo) + std::abs(S[i].hi));
            S[i].inflate(r);
        }
        return S;
    }

    IBox apply_resets(const CompiledTrans& tr, const IBox& box) const {
        IBox out = box;
        for (const auto& [idx, row] : tr.resets) out[idx] = row.eval(box);
        return out;
    }

    void spawn_jumps(const Thread& th, const IBox& from) {
        if (th.depth >= s.max_jumps) return;
        for (int ti : cm.locs[th.loc].out) {
            const CompiledTrans& tr = cm.trans[ti];
            IBox J = from;
            if (tr.guard.infeasible || !tighten_box(J, tr.guard)) continue;
            rs.jumps.push_back({th.k, ti});
            pools[th.depth + 1].push_back({tr.target, th.k, apply_resets(tr, J), th.depth + 1});
        }
    }

    void propagate(Thread th) {
        while (th.k <= rs.steps) {
            if (++rs.boxes_processed > kWorkBudget)
                fail_analysis(
                    "horizon exceeded without convergence of guard processing (flowpipe work "
                    "budget exhausted)");
            const CompiledLoc& l = cm.locs[th.loc];
            if (!tighten_box(th.box, l.invariant)) return;

            if (l.urgent) {
                record(th.loc, th.k, th.box, th.depth);
                spawn_jumps(th, th.box);
                return;
            }

            auto& memo = acc[th.loc][th.k];
            if (memo && memo->spread >= th.depth && subset(th.box, memo->box)) return;
            if (memo) {
                memo->box = hull(memo->box, th.box);
                memo->spread = std::max(memo->spread, th.depth);
            } else {
                memo = Memo{th.box, th.depth};
            }

            IBox next = affine_image(step_maps[th.loc].E, step_maps[th.loc].g, th.box);
            IBox S = bloat(l, hull(th.box, next));
            if (!tighten_box(S, l.invariant)) {
                // The whole step slipped outside; keep the entry point sliver.
                IBox sliver = th.box;
                record(th.loc, th.k, sliver, th.depth);
                spawn_jumps(th, sliver);
                return;
            }
            record(th.loc, th.k, S, th.depth);
            spawn_jumps(th, S);

            th.box = std::move(next);
            th.k++;
        }
    }

    ReachSets run() {
        IBox init = initial_box(cm);
        pools[0].push_back({cm.initial_loc, 0, std::move(init), 0});
        for (int d = 0; d <= s.max_jumps + 1; ++d) {
            if (static_cast<size_t>(d) >= pools.size() || pools[d].empty()) break;
            rs.rounds++;
            while (!pools[d].empty()) {
                Thread th = std::move(pools[d].front());
                pools[d].pop_front();
                propagate(std::move(th));
            }
        }
        return std::move(rs);
    }
};

}  // namespace

ReachSets flowpipe(const CompiledModel& cm, const SimSettings& s) {
    s.check();
    return PipeRunner(cm, s).run();
}

ReachSets flowpipe(const ProductModel& pm, const SimSettings& s) {
    CompiledModel cm = compile_model(pm);
    return flowpipe(cm, s);
}

FeatureRange feature_range_of(const ReachSets& rs, const CompiledModel& cm) {
    FeatureRange out;
    if (cm.feat_idx < 0) return out;
    for (size_t li = 0; li < cm.locs.size(); ++li) {
        if (!cm.pm->is_accept(static_cast<int>(li))) continue;
        for (const auto& slot : rs.hulls[li]) {
            if (!slot) continue;
            const Interval& f = (*slot)[cm.feat_idx];
            if (out.empty) {
                out.lo = f.lo;
                out.hi = f.hi;
                out.empty = false;
            } else {
                out.lo = std::min(out.lo, f.lo);
                out.hi = std::max(out.hi, f.hi);
            }
        }
    }
    return out;
}

FeatureRange initial_feature_range(const ProductModel& pm, const SimSettings& s) {
    CompiledModel cm = compile_model(pm);
    ReachSets rs = flowpipe(cm, s);
    return feature_range_of(rs, cm);
}

std::string write_reach_csv(const ReachSets& rs) {
    std::ostringstream os;
    os << "location,step,t0,t1,var,lo,hi\n";
    for (size_t li = 0; li < rs.hulls.size(); ++li) {
        for (size_t k = 0; k < rs.hulls[li].size(); ++k) {
            const auto& slot = rs.hulls[li][k];
            if (!slot) continue;
            for (size_t vi = 0; vi < rs.vars.size(); ++vi) {
                os << rs.locations[li] << "," << k << "," << format_double(k * rs.step) << ","
                   << format_double((k + 1) * rs.step) << "," << rs.vars[vi] << ","
                   << format_double((*slot)[vi].lo) << "," << format_double((*slot)[vi].hi)
                   << "\n";
            }
        }
    }
    return os.str();
}

}  // namespace featkit
