#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace usf::harness {

/// One evaluation snapshot. td_error, loss_q and loss_psi average the updates
/// since the previous snapshot and are NaN when there were none (or, for
/// loss_psi, when the agent has no psi loss).
struct EvalRecord {
    int stage = 1;
    std::uint64_t seed = 0;
    std::int64_t step = 0;
    std::string eval_set = "train";  // "train" or "holdout"
    double done_rate = 0.0;
    double mean_steps = 0.0;
    double td_error = 0.0;
    double loss_q = 0.0;
    double loss_psi = 0.0;
};

struct RunMetrics {
    std::uint64_t seed = 0;
    std::vector<EvalRecord> records;
};

enum class Metric { done_rate, mean_steps, td_error, loss_q, loss_psi };

std::string to_string(Metric metric);
Metric metric_from_string(const std::string& name);
const std::vector<Metric>& all_metrics();
double metric_value(const EvalRecord& record, Metric metric);

extern const char* const kMetricsHeader;

/// Writes the header and one row per record; reals use %.17g.
void write_metrics_csv(std::ostream& out, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_metrics_csv(std::istream& in);
void save_metrics_csv(const std::string& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> load_metrics_csv(const std::string& path);

struct Series {
    std::vector<std::int64_t> steps;
    std::vector<double> values;
};

/// Records of one seed and eval set (and stage, when given) in file order.
Series extract(const std::vector<EvalRecord>& records, std::uint64_t seed, std::optional<int> stage,
               const std::string& eval_set, Metric metric);

/// Centered moving mean with half-width (window - 1) / 2, shrunk
/// symmetrically near the ends. NaN entries are skipped; a window holding
/// only NaN yields NaN.
std::vector<double> smooth(const std::vector<double>& series, int window);

struct AggregateSeries {
    std::vector<std::int64_t> steps;
    std::vector<double> mean;
    std::vector<double> stderr_;
    std::size_t runs = 0;
};

/// Pointwise mean and standard error (sample standard deviation / sqrt(k);
/// 0 for a single run). Throws ConfigError if the runs' steps differ.
AggregateSeries aggregate(const std::vector<Series>& runs);

/// Aggregates every (stage, eval set, metric) over the seeds in `records`
/// into rows `stage,eval_set,metric,step,mean,stderr,runs`.
void write_aggregate_csv(std::ostream& out, const std::vector<EvalRecord>& records);

} // namespace usf::harness
