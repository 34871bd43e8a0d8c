#include <cmath>

#include "iotllm/benchmark.hpp"
#include "iotllm/error.hpp"

namespace iotllm {

double accuracy(const std::vector<SampleResult>& results)
{
    if (results.empty()) {
        throw Error(ErrorCode::invalid_argument, "accuracy of an empty result set");
    }
    std::size_t correct = 0;
    for (const auto& r : results) {
        correct += r.correct ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(results.size());
}

RegressionMetrics regression_metrics(const std::vector<double>& errors_m)
{
    if (errors_m.empty()) {
        throw Error(ErrorCode::invalid_argument, "regression metrics of an empty error set");
    }
    const auto n = static_cast<double>(errors_m.size());
    double sum = 0;
    double sum_sq = 0;
    for (double e : errors_m) {
        if (!std::isfinite(e)) {
            throw Error(ErrorCode::invalid_argument, "non-finite localization error");
        }
        sum += e;
        sum_sq += e * e;
    }
    RegressionMetrics m;
    m.mae_m = sum / n;
    m.rmse_m = std::sqrt(sum_sq / n);
    double dev = 0;
    for (double e : errors_m) {
        dev += (e - m.mae_m) * (e - m.mae_m);
    }
    m.std_m = std::sqrt(dev / n);
    // sqrt rounding can leave rmse a ulp below mae for constant errors.
    m.rmse_m = std::max(m.rmse_m, m.mae_m);
    return m;
}

double improvement_pct(double baseline, double ours, MetricKind kind)
{
    if (!(baseline > 0)) {
        throw Error(ErrorCode::invalid_argument, "improvement needs a positive baseline");
    }
    const double delta = kind == MetricKind::higher_better ? ours - baseline : baseline - ours;
    return delta / baseline * 100.0;
}

}  // namespace iotllm
