#include "usf/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "usf/core/error.hpp"

namespace usf::harness {

const char* const kMetricsHeader = "stage,seed,step,eval_set,done_rate,mean_steps,td_error,loss_q,loss_psi";

std::string to_string(Metric metric) {
    switch (metric) {
    case Metric::done_rate:
        return "done_rate";
    case Metric::mean_steps:
        return "mean_steps";
    case Metric::td_error:
        return "td_error";
    case Metric::loss_q:
        return "loss_q";
    case Metric::loss_psi:
        return "loss_psi";
    }
    return "done_rate";
}

const std::vector<Metric>& all_metrics() {
    static const std::vector<Metric> metrics = {Metric::done_rate, Metric::mean_steps, Metric::td_error,
                                                Metric::loss_q, Metric::loss_psi};
    return metrics;
}

Metric metric_from_string(const std::string& name) {
    for (Metric m : all_metrics()) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw ConfigError("unknown metric '" + name + "' (valid: done_rate, mean_steps, td_error, loss_q, loss_psi)");
}

double metric_value(const EvalRecord& record, Metric metric) {
    switch (metric) {
    case Metric::done_rate:
        return record.done_rate;
    case Metric::mean_steps:
        return record.mean_steps;
    case Metric::td_error:
        return record.td_error;
    case Metric::loss_q:
        return record.loss_q;
    case Metric::loss_psi:
        return record.loss_psi;
    }
    return 0.0;
}

namespace {

std::string real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_real(const std::string& field, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size()) {
        throw ConfigError("metrics line " + std::to_string(line) + ": bad number '" + field + "'");
    }
    return v;
}

} // namespace

void write_metrics_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
    out << kMetricsHeader << '\n';
    for (const EvalRecord& r : records) {
        out << r.stage << ',' << r.seed << ',' << r.step << ',' << r.eval_set << ',' << real(r.done_rate) << ','
            << real(r.mean_steps) << ',' << real(r.td_error) << ',' << real(r.loss_q) << ',' << real(r.loss_psi)
            << '\n';
    }
}

std::vector<EvalRecord> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw ConfigError(std::string("metrics CSV must start with the header '") + kMetricsHeader + "'");
    }
    std::vector<EvalRecord> records;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 9) {
            throw ConfigError("metrics line " + std::to_string(number) + ": expected 9 fields");
        }
        EvalRecord r;
        r.stage = static_cast<int>(parse_real(fields[0], number));
        r.seed = std::stoull(fields[1]);
        r.step = std::stoll(fields[2]);
        r.eval_set = fields[3];
        r.done_rate = parse_real(fields[4], number);
        r.mean_steps = parse_real(fields[5], number);
        r.td_error = parse_real(fields[6], number);
        r.loss_q = parse_real(fields[7], number);
        r.loss_psi = parse_real(fields[8], number);
        records.push_back(std::move(r));
    }
    return records;
}

void save_metrics_csv(const std::string& path, const std::vector<EvalRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    write_metrics_csv(out, records);
}

std::vector<EvalRecord> load_metrics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path);
    }
    return read_metrics_csv(in);
}

Series extract(const std::vector<EvalRecord>& records, std::uint64_t seed, std::optional<int> stage,
               const std::string& eval_set, Metric metric) {
    Series s;
    for (const EvalRecord& r : records) {
        if (r.seed == seed && r.eval_set == eval_set && (!stage || r.stage == *stage)) {
            s.steps.push_back(r.step);
            s.values.push_back(metric_value(r, metric));
        }
    }
    return s;
}

std::vector<double> smooth(const std::vector<double>& series, int window) {
    if (window < 1) {
        throw ConfigError("smoothing window must be at least 1");
    }
    const auto n = static_cast<std::ptrdiff_t>(series.size());
    const std::ptrdiff_t half = (window - 1) / 2;
    std::vector<double> out(series.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t h = std::min({half, i, n - 1 - i});
        double sum = 0.0;
        int count = 0;
        for (std::ptrdiff_t j = i - h; j <= i + h; ++j) {
            if (!std::isnan(series[static_cast<std::size_t>(j)])) {
                sum += series[static_cast<std::size_t>(j)];
                ++count;
            }
        }
        out[static_cast<std::size_t>(i)] = count > 0 ? sum / count : std::nan("");
    }
    return out;
}

AggregateSeries aggregate(const std::vector<Series>& runs) {
    if (runs.empty()) {
        throw ConfigError("aggregate needs at least one run");
    }
    AggregateSeries out;
    out.steps = runs.front().steps;
    out.runs = runs.size();
    const std::size_t n = out.steps.size();
    for (const Series& r : runs) {
        if (r.steps != out.steps || r.values.size() != n) {
            throw ConfigError("runs have misaligned evaluation steps");
        }
    }
    const auto k = static_cast<double>(runs.size());
    out.mean.assign(n, 0.0);
    out.stderr_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const Series& r : runs) {
            sum += r.values[i];
        }
        const double mean = sum / k;
        out.mean[i] = mean;
        if (runs.size() > 1) {
            double sq = 0.0;
            for (const Series& r : runs) {
                sq += (r.values[i] - mean) * (r.values[i] - mean);
            }
            out.stderr_[i] = std::sqrt(sq / (k - 1.0)) / std::sqrt(k);
        }
    }
    return out;
}

void write_aggregate_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
    std::set<std::uint64_t> seeds;
    std::set<int> stages;
    std::vector<std::string> sets;
    for (const EvalRecord& r : records) {
        seeds.insert(r.seed);
        stages.insert(r.stage);
        if (std::find(sets.begin(), sets.end(), r.eval_set) == sets.end()) {
            sets.push_back(r.eval_set);
        }
    }
    out << "stage,eval_set,metric,step,mean,stderr,runs\n";
    for (int stage : stages) {
        for (const std::string& set : sets) {
            for (Metric metric : all_metrics()) {
                std::vector<Series> runs;
                for (std::uint64_t seed : seeds) {
                    runs.push_back(extract(records, seed, stage, set, metric));
                }
                const AggregateSeries agg = aggregate(runs);
                for (std::size_t i = 0; i < agg.steps.size(); ++i) {
                    out << stage << ',' << set << ',' << to_string(metric) << ',' << agg.steps[i] << ','
                        << real(agg.mean[i]) << ',' << real(agg.stderr_[i]) << ',' << agg.runs << '\n';
                }
            }
        }
    }
}

} // namespace usf::harness
