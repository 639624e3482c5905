#include "support/oracles.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace cdrfraud::testing {

Fraction::Fraction(std::int64_t n, std::int64_t d) {
    if (d == 0) throw std::domain_error("zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const auto g = std::gcd(n < 0 ? -n : n, d);
    num = g ? n / g : 0;
    den = g ? d / g : 1;
}

Fraction Fraction::operator+(const Fraction& o) const {
    const __int128 n = static_cast<__int128>(num) * o.den + static_cast<__int128>(o.num) * den;
    const __int128 d = static_cast<__int128>(den) * o.den;
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b != 0) {
        const __int128 t = a % b;
        a = b;
        b = t;
    }
    if (a == 0) return Fraction(0, 1);
    return Fraction(static_cast<std::int64_t>(n / a), static_cast<std::int64_t>(d / a));
}

Fraction Fraction::operator-(const Fraction& o) const { return *this + Fraction(-o.num, o.den); }

bool Fraction::operator<(const Fraction& o) const {
    return static_cast<__int128>(num) * o.den < static_cast<__int128>(o.num) * den;
}

Fraction purity(const LabelVector& labels, const std::vector<Index>& rows) {
    if (rows.empty()) return Fraction(0, 1);
    std::int64_t pos = 0;
    for (Index r : rows) pos += labels(r) == kPositive;
    const auto n = static_cast<std::int64_t>(rows.size());
    const std::int64_t neg = n - pos;
    return Fraction(pos * pos + neg * neg, n);
}

Fraction tree_impurity_decrease(const Tree& tree, const FeatureMatrix& x, const LabelVector& labels,
                                const std::vector<Index>& rows) {
    // Group rows by the leaf they reach, walking the node array by hand.
    std::map<std::size_t, std::vector<Index>> by_leaf;
    const auto& nodes = tree.nodes();
    for (Index r : rows) {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            i = x(r, nodes[i].feature) <= nodes[i].threshold ? i + 1 : static_cast<std::size_t>(nodes[i].right);
        }
        by_leaf[i].push_back(r);
    }
    Fraction total;
    for (const auto& [leaf, members] : by_leaf) total = total + purity(labels, members);
    const Fraction gain = total - purity(labels, rows);
    return Fraction(gain.num, gain.den * static_cast<std::int64_t>(rows.size()));
}

namespace {

struct Cut {
    Fraction gain;
    std::vector<Index> left;
    std::vector<Index> right;
};

// Every nontrivial "x[f] <= v" partition, in (feature, v) order.
template <typename Visit>
void for_each_cut(const FeatureMatrix& x, const std::vector<Index>& rows, Visit visit) {
    for (Index f = 0; f < x.cols(); ++f) {
        std::set<double> values;
        for (Index r : rows) values.insert(x(r, f));
        for (double v : values) {
            std::vector<Index> left;
            std::vector<Index> right;
            for (Index r : rows) (x(r, f) <= v ? left : right).push_back(r);
            if (left.empty() || right.empty()) continue;
            visit(left, right);
        }
    }
}

Fraction greedy_sum(const FeatureMatrix& x, const LabelVector& labels, const std::vector<Index>& rows,
                    int depth) {
    const Fraction here = purity(labels, rows);
    if (depth == 0 || rows.size() < 2) return here;
    bool found = false;
    Cut best;
    for_each_cut(x, rows, [&](const std::vector<Index>& l, const std::vector<Index>& r) {
        const Fraction gain = purity(labels, l) + purity(labels, r) - here;
        if (!(Fraction(0, 1) < gain)) return;
        if (!found || best.gain < gain) {
            found = true;
            best = {gain, l, r};
        }
    });
    if (!found) return here;
    return greedy_sum(x, labels, best.left, depth - 1) + greedy_sum(x, labels, best.right, depth - 1);
}

Fraction optimal_sum(const FeatureMatrix& x, const LabelVector& labels, const std::vector<Index>& rows,
                     int depth) {
    Fraction best = purity(labels, rows);
    if (depth == 0 || rows.size() < 2) return best;
    for_each_cut(x, rows, [&](const std::vector<Index>& l, const std::vector<Index>& r) {
        const Fraction s = optimal_sum(x, labels, l, depth - 1) + optimal_sum(x, labels, r, depth - 1);
        if (best < s) best = s;
    });
    return best;
}

Fraction per_row(const Fraction& gain, std::size_t n) {
    return Fraction(gain.num, gain.den * static_cast<std::int64_t>(n));
}

}  // namespace

Fraction greedy_exhaustive_decrease(const FeatureMatrix& x, const LabelVector& labels,
                                    const std::vector<Index>& rows, int depth) {
    return per_row(greedy_sum(x, labels, rows, depth) - purity(labels, rows), rows.size());
}

Fraction optimal_tree_decrease(const FeatureMatrix& x, const LabelVector& labels,
                               const std::vector<Index>& rows, int depth) {
    return per_row(optimal_sum(x, labels, rows, depth) - purity(labels, rows), rows.size());
}

double auc_by_pairs(const ScoreVector& scores, const LabelVector& truth) {
    double concordant = 0.0;
    double tied = 0.0;
    double pairs = 0.0;
    for (Index i = 0; i < truth.size(); ++i) {
        if (truth(i) != kPositive) continue;
        for (Index j = 0; j < truth.size(); ++j) {
            if (truth(j) == kPositive) continue;
            pairs += 1.0;
            if (scores(i) > scores(j)) concordant += 1.0;
            else if (scores(i) == scores(j)) tied += 1.0;
        }
    }
    return (concordant + 0.5 * tied) / pairs;
}

std::string check_dbscan(const FeatureMatrix& x, double eps, int min_pts, const std::vector<int>& labels) {
    const Index n = x.rows();
    auto near = [&](Index a, Index b) {
        double d = 0.0;
        for (Index j = 0; j < x.cols(); ++j) d += (x(a, j) - x(b, j)) * (x(a, j) - x(b, j));
        return d <= eps * eps;
    };
    std::vector<bool> core(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        int count = 0;
        for (Index j = 0; j < n; ++j) count += near(i, j);
        core[static_cast<std::size_t>(i)] = count >= min_pts;
    }
    // Union-find over core points.
    std::vector<Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index a) {
        while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
        return a;
    };
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            if (core[static_cast<std::size_t>(i)] && core[static_cast<std::size_t>(j)] && near(i, j)) {
                parent[static_cast<std::size_t>(find(i))] = find(j);
            }
        }
    }
    std::map<Index, int> component_label;
    std::map<int, Index> label_component;
    for (Index i = 0; i < n; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (core[static_cast<std::size_t>(i)]) {
            if (label < 0) return "core point " + std::to_string(i) + " labelled noise";
            const Index c = find(i);
            auto [it, fresh] = component_label.emplace(c, label);
            if (!fresh && it->second != label) return "core component split across clusters at " + std::to_string(i);
            auto [it2, fresh2] = label_component.emplace(label, c);
            if (!fresh2 && it2->second != c) return "cluster merges two core components at " + std::to_string(i);
        }
    }
    for (Index i = 0; i < n; ++i) {
        if (core[static_cast<std::size_t>(i)]) continue;
        const int label = labels[static_cast<std::size_t>(i)];
        std::set<int> adjacent;
        for (Index j = 0; j < n; ++j) {
            if (core[static_cast<std::size_t>(j)] && near(i, j)) adjacent.insert(component_label.at(find(j)));
        }
        if (adjacent.empty()) {
            if (label >= 0) return "unreachable point " + std::to_string(i) + " not noise";
        } else if (!adjacent.count(label)) {
            return "border point " + std::to_string(i) + " attached to a non-adjacent cluster";
        }
    }
    return {};
}

}  // namespace cdrfraud::testing
