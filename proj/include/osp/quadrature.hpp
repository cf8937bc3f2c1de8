#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace osp::quad {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

Rule gauss_legendre(int points);

/// The fixed 15-point rule used by the adaptive integrator.
const Rule& panel_rule();

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_panels = 4000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;   ///< sum of panel error estimates
    double l1 = 0.0;      ///< integral of |f|, the scale used by rel_tol
    int panels = 0;
    bool converged = false;
};

namespace detail {

struct PanelSums {
    double value;
    double l1;
};

template <class F>
PanelSums apply_rule(const Rule& rule, F& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double s = 0.0, s_abs = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double v = f(mid + half * rule.nodes[k]) * rule.weights[k];
        s += v;
        s_abs += std::abs(v);
    }
    return {s * half, s_abs * half};
}

struct Panel {
    double a, b;
    PanelSums left, right;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace detail

/// Globally adaptive Gauss-Legendre quadrature on (a, b).
///
/// Each panel is scored by the difference between the rule on the whole
/// panel and the sum over its two halves; the worst panel is bisected until
/// the summed error drops below max(abs_tol, rel_tol * integral of |f|).
/// Nodes are interior, so integrable endpoint singularities are fine.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
    const Rule& rule = panel_rule();
    auto make_panel = [&](double lo, double hi, detail::PanelSums whole) {
        const double mid = 0.5 * (lo + hi);
        detail::Panel p{lo, hi, detail::apply_rule(rule, f, lo, mid), detail::apply_rule(rule, f, mid, hi), 0.0};
        p.error = std::abs(whole.value - (p.left.value + p.right.value));
        return p;
    };

    std::vector<detail::Panel> heap;
    heap.reserve(64);
    constexpr int kInitial = 4;
    const double width = (b - a) / kInitial;
    for (int k = 0; k < kInitial; ++k) {
        const double lo = a + k * width;
        const double hi = (k + 1 == kInitial) ? b : lo + width;
        heap.push_back(make_panel(lo, hi, detail::apply_rule(rule, f, lo, hi)));
    }
    std::make_heap(heap.begin(), heap.end());

    auto totals = [&heap]() {
        Result t;
        for (const auto& p : heap) {
            t.value += p.left.value + p.right.value;
            t.l1 += p.left.l1 + p.right.l1;
            t.error += p.error;
        }
        t.panels = static_cast<int>(heap.size());
        return t;
    };
    auto add = [](Result& t, const detail::Panel& p, double sign) {
        t.value += sign * (p.left.value + p.right.value);
        t.l1 += sign * (p.left.l1 + p.right.l1);
        t.error += sign * p.error;
    };

    Result r = totals();
    for (;;) {
        if (r.error <= std::max(opt.abs_tol, opt.rel_tol * r.l1)) {
            // Confirm with exact sums; the running totals accumulate rounding.
            r = totals();
            if (r.error <= std::max(opt.abs_tol, opt.rel_tol * r.l1)) break;
        }
        if (static_cast<int>(heap.size()) >= opt.max_panels) {
            r = totals();
            r.converged = false;
            return r;
        }
        std::pop_heap(heap.begin(), heap.end());
        const detail::Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push_back(worst);
            r = totals();
            r.converged = false;
            return r;
        }
        add(r, worst, -1.0);
        for (auto&& child : {make_panel(worst.a, mid, worst.left), make_panel(mid, worst.b, worst.right)}) {
            add(r, child, 1.0);
            heap.push_back(child);
            std::push_heap(heap.begin(), heap.end());
        }
        r.panels = static_cast<int>(heap.size());
    }
    r.converged = true;
    return r;
}

}  // namespace osp::quad
