#include "cdrfraud/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "cdrfraud/error.hpp"
#include "cdrfraud/rng.hpp"

namespace cdrfraud {

ScalerParams fit_scaler(const Dataset& data) {
    if (data.rows() == 0) throw Error("cannot fit a scaler on an empty dataset");
    ScalerParams p;
    p.feature_names = data.feature_names;
    p.min = data.features.colwise().minCoeff().transpose();
    p.max = data.features.colwise().maxCoeff().transpose();
    return p;
}

FeatureMatrix transform(const FeatureMatrix& features, const ScalerParams& params) {
    if (features.cols() != params.size()) {
        throw DimensionError("scaler was fitted on " + std::to_string(params.size()) +
                             " features, got " + std::to_string(features.cols()));
    }
    return min_max_scale(features, params.min, params.max);
}

Dataset transform(const Dataset& data, const ScalerParams& params) {
    Dataset out = data;
    out.features = transform(data.features, params);
    return out;
}

SplitPair split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie strictly between 0 and 1");
    }
    Rng rng(seed);
    SplitPair out;
    out.seed = seed;
    for (int label : {kNegative, kPositive}) {
        std::vector<Index> members;
        for (Index i = 0; i < data.rows(); ++i) {
            if (data.labels(i) == label) members.push_back(i);
        }
        if (members.size() < 2) {
            throw Error("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                        " rows; a stratified split needs at least 2");
        }
        rng.shuffle(std::span<Index>(members));
        const auto n = static_cast<double>(members.size());
        auto n_test = static_cast<std::size_t>(std::floor(test_fraction * n + 0.5));
        n_test = std::min(n_test, members.size() - 1);
        out.test_rows.insert(out.test_rows.end(), members.begin(),
                             members.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train_rows.insert(out.train_rows.end(),
                              members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
    }
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    out.train = data.subset(out.train_rows);
    out.test = data.subset(out.test_rows);
    return out;
}

}  // namespace cdrfraud
