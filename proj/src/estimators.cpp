#include "nesslab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include "nesslab/error.hpp"

namespace nesslab {

bool EstimateWithError::consistent_with(double value, double k) const {
    return std::abs(mean - value) <= k * error;
}

namespace {

struct Batched {
    std::vector<double> averages;
    std::size_t used = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
};

// Appends the batch averages of one run to `out`.
void batch_run(std::span<const double> x, std::size_t batches, Batched& out) {
    const std::size_t nb = std::min(batches, x.size());
    if (nb == 0) return;
    const std::size_t len = x.size() / nb;
    const std::size_t offset = x.size() - len * nb;
    for (std::size_t b = 0; b < nb; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const double v = x[offset + b * len + i];
            acc += v;
            out.sum += v;
            out.sum_sq += v * v;
        }
        out.averages.push_back(acc / static_cast<double>(len));
    }
    out.used += len * nb;
}

EstimateWithError summarize(const Batched& b) {
    const std::size_t nb = b.averages.size();
    require(nb >= 2, ErrorKind::insufficient_data,
            "batch means need at least two batches, got " + std::to_string(nb));
    EstimateWithError e;
    e.batches = nb;
    e.n_raw = b.used;
    e.mean = std::accumulate(b.averages.begin(), b.averages.end(), 0.0) / static_cast<double>(nb);
    double var = 0.0;
    for (double m : b.averages) var += (m - e.mean) * (m - e.mean);
    var /= static_cast<double>(nb - 1);
    e.error = std::sqrt(var / static_cast<double>(nb));
    const double n = static_cast<double>(b.used);
    const double raw_mean = b.sum / n;
    const double raw_var = std::max(0.0, b.sum_sq / n - raw_mean * raw_mean) * n / std::max(1.0, n - 1);
    e.n_effective = e.error > 0.0 ? std::min(n, raw_var / (e.error * e.error)) : n;
    return e;
}

std::size_t per_run_batches(std::size_t batches, std::size_t runs) {
    return (batches + runs - 1) / std::max<std::size_t>(runs, 1);
}

std::vector<double> select_series(const ObservableSeries& s, const SampleSelector& select) {
    std::vector<double> out;
    out.reserve(s.samples.size());
    for (const auto& smp : s.samples) out.push_back(select(smp));
    return out;
}

double upper_tail_f(double x, double d1, double d2) {
    if (!(x > 0.0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, d2), x));
}

double upper_tail_chi2(double x, double dof) {
    if (!(x > 0.0)) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

const ModelParams& common_model(std::span<const ObservableSeries> ensemble) {
    require(!ensemble.empty(), ErrorKind::insufficient_data, "empty ensemble");
    return ensemble.front().model;
}

std::vector<double> moment_or_throw(const ObservableSeries& s, std::string_view name) {
    return s.moment_series(name);
}

}  // namespace

std::size_t resolve_batches(std::size_t batches, std::size_t total_samples) {
    if (batches != auto_batches) return batches;
    const auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(total_samples)));
    return std::max(default_batches, root);
}

EstimateWithError batch_means(std::span<const double> x, std::size_t batches) {
    require(x.size() >= 2, ErrorKind::insufficient_data,
            "batch means need at least two samples, got " + std::to_string(x.size()));
    Batched b;
    batch_run(x, resolve_batches(batches, x.size()), b);
    return summarize(b);
}

EstimateWithError batch_means(const std::vector<std::vector<double>>& runs, std::size_t batches) {
    Batched b;
    std::size_t total = 0;
    for (const auto& r : runs) total += r.size();
    const std::size_t per = per_run_batches(resolve_batches(batches, total), runs.size());
    for (const auto& r : runs) batch_run(r, per, b);
    return summarize(b);
}

std::vector<double> batch_averages(const std::vector<std::vector<double>>& runs,
                                   std::size_t batches) {
    Batched b;
    const std::size_t per = per_run_batches(batches, runs.size());
    for (const auto& r : runs) batch_run(r, per, b);
    return b.averages;
}

std::vector<std::vector<double>> batch_matrix(
    const std::vector<std::vector<std::vector<double>>>& columns, std::size_t batches) {
    std::vector<std::vector<double>> rows;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto avg = batch_averages(columns[c], batches);
        if (c == 0) rows.assign(avg.size(), std::vector<double>(columns.size()));
        require(avg.size() == rows.size(), ErrorKind::invalid_input,
                "batch matrix columns have different lengths");
        for (std::size_t b = 0; b < avg.size(); ++b) rows[b][c] = avg[b];
    }
    return rows;
}

EstimateWithError stationary_average(std::span<const ObservableSeries> ensemble,
                                     const SampleSelector& select, std::size_t batches) {
    std::vector<std::vector<double>> runs;
    for (const auto& s : ensemble) runs.push_back(select_series(s, select));
    return batch_means(runs, batches);
}

EstimateWithError stationary_average(const ObservableSeries& series, const SampleSelector& select,
                                     std::size_t batches) {
    return stationary_average(std::span<const ObservableSeries>(&series, 1), select, batches);
}

ZeroVectorTest zero_vector_test(const std::vector<std::vector<double>>& rows) {
    require(rows.size() >= 2 && !rows.front().empty(), ErrorKind::insufficient_data,
            "zero-vector test needs at least two batches");
    const auto nb = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd X(nb, p);
    for (Eigen::Index b = 0; b < nb; ++b)
        for (Eigen::Index j = 0; j < p; ++j) X(b, j) = rows[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
    const Eigen::VectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd centred = X.rowwise() - mean.transpose();
    // covariance of the mean vector
    const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>((nb - 1) * nb);

    ZeroVectorTest out;
    if (nb >= p + 2) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            const double t2 = mean.dot(ldlt.solve(mean));
            const double d1 = static_cast<double>(p), d2 = static_cast<double>(nb - p);
            out.statistic = t2;
            out.dof1 = d1;
            out.dof2 = d2;
            out.p_value = upper_tail_f(t2 * d2 / (d1 * static_cast<double>(nb - 1)), d1, d2);
            out.full_covariance = true;
            return out;
        }
    }
    double chi2 = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
        if (cov(j, j) > 0.0) chi2 += mean(j) * mean(j) / cov(j, j);
    out.statistic = chi2;
    out.dof1 = static_cast<double>(p);
    out.dof2 = 0.0;
    out.p_value = upper_tail_chi2(chi2, static_cast<double>(p));
    out.full_covariance = false;
    return out;
}

namespace {

// columns[i][r]: series of per-site (or per-bond) value i in run r.
std::vector<std::vector<std::vector<double>>> vector_columns(
    std::span<const ObservableSeries> ensemble, std::size_t width,
    const std::function<const std::vector<double>&(const ObservableSample&)>& field,
    const char* what) {
    std::vector<std::vector<std::vector<double>>> cols(width,
                                                       std::vector<std::vector<double>>(ensemble.size()));
    for (std::size_t r = 0; r < ensemble.size(); ++r) {
        for (const auto& smp : ensemble[r].samples) {
            const auto& v = field(smp);
            require(v.size() == width, ErrorKind::missing_moments,
                    std::string("series does not record ") + what);
            for (std::size_t i = 0; i < width; ++i) cols[i][r].push_back(v[i]);
        }
    }
    return cols;
}

ProfileEstimate profile_from_columns(const std::vector<std::vector<std::vector<double>>>& cols,
                                     std::size_t batches, std::size_t first, std::size_t last,
                                     int order) {
    ProfileEstimate out;
    for (const auto& c : cols) out.sites.push_back(batch_means(c, batches));
    const auto rows = batch_matrix(cols, batches);
    std::vector<std::vector<double>> contrasts;
    for (const auto& row : rows) {
        std::vector<double> d;
        if (order == 1) {
            for (std::size_t i = first; i < last; ++i) d.push_back(row[i] - row[i + 1]);
        } else {
            for (std::size_t i = first + 1; i < last; ++i)
                d.push_back(row[i - 1] - 2.0 * row[i] + row[i + 1]);
        }
        contrasts.push_back(std::move(d));
    }
    if (!contrasts.empty() && !contrasts.front().empty())
        out.shape_test = zero_vector_test(contrasts);
    return out;
}

}  // namespace

ProfileEstimate temperature_profile_estimate(std::span<const ObservableSeries> ensemble,
                                             std::size_t batches, std::optional<std::size_t> first,
                                             std::optional<std::size_t> last) {
    const auto& model = common_model(ensemble);
    const std::size_t n = model.size;
    const auto cols = vector_columns(
        ensemble, n, [](const ObservableSample& s) -> const std::vector<double>& { return s.kin; },
        "kinetic terms");
    const std::size_t lo = first.value_or(n > 2 ? 1 : 0);
    const std::size_t hi = last.value_or(n > 2 ? n - 2 : n - 1);
    require(lo <= hi && hi < n, ErrorKind::invalid_input, "profile range out of bounds");
    return profile_from_columns(cols, batches, lo, hi, 2);
}

ProfileEstimate current_profile_estimate(std::span<const ObservableSeries> ensemble,
                                         std::size_t batches) {
    const auto& model = common_model(ensemble);
    const std::size_t nb = model.bond_count();
    const auto cols = vector_columns(
        ensemble, nb, [](const ObservableSample& s) -> const std::vector<double>& { return s.j; },
        "bond currents");
    return profile_from_columns(cols, batches, 0, nb - 1, 1);
}

std::vector<EntropyProductionRecord> entropy_production(const ObservableSeries& series,
                                                        const DynamicsParams& dyn) {
    require(dyn.temperature > 0.0, ErrorKind::invalid_input, "temperature must be > 0");
    const double scale = static_cast<double>(series.model.size) * dyn.tau /
                         (dyn.temperature * dyn.temperature);
    std::vector<EntropyProductionRecord> out;
    out.reserve(series.samples.size());
    for (const auto& s : series.samples) {
        EntropyProductionRecord r;
        r.t = s.t;
        r.sigma = scale * s.J;
        if (!out.empty()) {
            const auto& prev = out.back();
            r.W = prev.W + 0.5 * (r.t - prev.t) * (r.sigma + prev.sigma);
            r.sigma_bar = r.W / (r.t - out.front().t);
        }
        out.push_back(r);
    }
    return out;
}

std::vector<double> window_averages(const std::vector<EntropyProductionRecord>& records,
                                    double window) {
    require(window > 0.0, ErrorKind::invalid_input, "window must be > 0");
    std::vector<double> out;
    if (records.size() < 2) return out;
    const double spacing = records[1].t - records[0].t;
    const auto per = static_cast<std::size_t>(std::llround(window / spacing));
    require(per >= 1, ErrorKind::invalid_input, "window shorter than the sample spacing");
    for (std::size_t start = 0; start + per < records.size(); start += per) {
        const auto& a = records[start];
        const auto& b = records[start + per];
        out.push_back((b.W - a.W) / (b.t - a.t));
    }
    return out;
}

RateFunctionEstimate rate_function_symmetry(std::span<const double> sigma_bar, double window,
                                            std::size_t bins_per_side, std::size_t min_count) {
    require(window > 0.0 && bins_per_side >= 1, ErrorKind::invalid_input,
            "rate function needs window > 0 and at least one bin per side");
    require(sigma_bar.size() >= 2, ErrorKind::insufficient_data, "too few window averages");
    double range = 0.0;
    for (double v : sigma_bar) range = std::max(range, std::abs(v));
    require(range > 0.0, ErrorKind::insufficient_data, "all window averages vanish");
    range *= 1.0 + 1e-12;

    RateFunctionEstimate out;
    out.window = window;
    out.bin_width = range / static_cast<double>(bins_per_side);
    const std::size_t nb = 2 * bins_per_side;
    out.counts.assign(nb, 0);
    for (double v : sigma_bar) {
        auto idx = static_cast<std::ptrdiff_t>(std::floor(v / out.bin_width)) +
                   static_cast<std::ptrdiff_t>(bins_per_side);
        idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(nb) - 1);
        ++out.counts[static_cast<std::size_t>(idx)];
    }
    const double total = static_cast<double>(sigma_bar.size());
    for (std::size_t b = 0; b < nb; ++b) {
        const double centre =
            (static_cast<double>(b) - static_cast<double>(bins_per_side) + 0.5) * out.bin_width;
        out.bins.push_back(centre);
        out.log_prob.push_back(out.counts[b] == 0
                                   ? -std::numeric_limits<double>::infinity()
                                   : std::log(out.counts[b] / (total * out.bin_width)) / window);
    }

    double sxx = 0.0, sxy = 0.0, chi2 = 0.0;
    std::vector<double> weights;
    for (std::size_t i = 0; i < bins_per_side; ++i) {
        const std::size_t plus = bins_per_side + i, minus = bins_per_side - 1 - i;
        const double np = out.counts[plus], nm = out.counts[minus];
        if (np < static_cast<double>(min_count) || nm < static_cast<double>(min_count)) continue;
        const double w = out.bins[plus];
        const double y = std::log(np / nm) / window;
        const double var = (1.0 / np + 1.0 / nm) / (window * window);
        out.fit_w.push_back(w);
        out.fit_y.push_back(y);
        weights.push_back(1.0 / var);
        sxx += w * w / var;
        sxy += w * y / var;
    }
    out.pairs_used = out.fit_w.size();
    if (out.pairs_used == 0)
        fail(ErrorKind::insufficient_negative_events,
             "no bin pair has " + std::to_string(min_count) +
                 " events on both signs; lower tau or the window length");
    out.symmetry_slope = sxy / sxx;
    for (std::size_t k = 0; k < out.pairs_used; ++k) {
        const double r = out.fit_y[k] - out.symmetry_slope * out.fit_w[k];
        chi2 += r * r * weights[k];
    }
    const double inflate =
        out.pairs_used > 1 ? std::max(1.0, chi2 / static_cast<double>(out.pairs_used - 1)) : 1.0;
    out.slope_stderr = std::sqrt(inflate / sxx);
    return out;
}

GreenKuboResult green_kubo(const std::vector<std::vector<double>>& runs, double sample_dt,
                           std::size_t sites, double temperature, const GreenKuboPolicy& policy,
                           std::size_t batches) {
    require(sample_dt > 0.0 && temperature > 0.0, ErrorKind::invalid_input,
            "Green-Kubo needs sample_dt > 0 and T > 0");
    require(!runs.empty(), ErrorKind::insufficient_data, "Green-Kubo needs at least one run");
    const std::size_t per = per_run_batches(std::max<std::size_t>(batches, 2), runs.size());
    std::size_t seg_len = std::numeric_limits<std::size_t>::max();
    for (const auto& r : runs) seg_len = std::min(seg_len, r.size() / per);
    require(seg_len >= 8, ErrorKind::insufficient_data, "series too short for Green-Kubo");
    std::size_t max_lag = policy.max_lag_time > 0.0
                              ? static_cast<std::size_t>(policy.max_lag_time / sample_dt)
                              : seg_len / 4;
    require(max_lag >= 2 && max_lag < seg_len, ErrorKind::invalid_input,
            "max lag must be shorter than a segment (" + std::to_string(seg_len) + " samples)");
    const double scale = static_cast<double>(sites) / (temperature * temperature);

    std::vector<std::vector<double>> corr;  // per segment
    std::vector<std::vector<double>> run_int;
    for (const auto& r : runs) {
        for (std::size_t s = 0; s < per; ++s) {
            const double* x = r.data() + s * seg_len;
            std::vector<double> c(max_lag + 1, 0.0);
            for (std::size_t l = 0; l <= max_lag; ++l) {
                double acc = 0.0;
                const std::size_t n = seg_len - l;
                for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i + l];
                c[l] = acc / static_cast<double>(n);
            }
            std::vector<double> k(max_lag + 1, 0.0);
            for (std::size_t l = 1; l <= max_lag; ++l)
                k[l] = k[l - 1] + 0.5 * sample_dt * scale * (c[l - 1] + c[l]);
            corr.push_back(std::move(c));
            run_int.push_back(std::move(k));
        }
    }
    const double ns = static_cast<double>(corr.size());
    auto mean_err = [&](const std::vector<std::vector<double>>& v, std::size_t l) {
        double m = 0.0, q = 0.0;
        for (const auto& row : v) m += row[l];
        m /= ns;
        for (const auto& row : v) q += (row[l] - m) * (row[l] - m);
        return std::pair{m, std::sqrt(q / (ns - 1.0) / ns)};
    };

    GreenKuboResult out;
    for (std::size_t l = 0; l <= max_lag; ++l) {
        const auto [c, ce] = mean_err(corr, l);
        const auto [k, ke] = mean_err(run_int, l);
        out.lag.push_back(static_cast<double>(l) * sample_dt);
        out.correlation.push_back(c);
        out.correlation_err.push_back(ce);
        out.running.push_back(k);
        out.running_err.push_back(ke);
    }

    const std::size_t sustain =
        std::max<std::size_t>(1, policy.sustain_time > 0.0
                                     ? static_cast<std::size_t>(policy.sustain_time / sample_dt)
                                     : max_lag / 10);
    std::size_t cut = max_lag;
    out.truncated = true;
    std::size_t quiet = 0;
    for (std::size_t l = 0; l <= max_lag; ++l) {
        if (std::abs(out.correlation[l]) < policy.noise_factor * out.correlation_err[l]) {
            if (++quiet > sustain) {
                cut = l - sustain;
                out.truncated = false;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    out.cutoff = out.lag[cut];
    out.kappa.mean = out.running[cut];
    out.kappa.error = out.running_err[cut];
    out.kappa.batches = corr.size();
    out.kappa.n_raw = corr.size() * seg_len;
    out.kappa.n_effective = ns;
    return out;
}

LinearResponseFit linear_response_fit(std::span<const double> taus,
                                      const std::vector<std::vector<std::vector<double>>>& current,
                                      std::size_t batches) {
    const std::size_t g = taus.size();
    require(g >= 1 && current.size() == g, ErrorKind::invalid_input,
            "linear response needs one set of runs per tau");
    const std::size_t runs = current.front().size();
    for (const auto& c : current)
        require(c.size() == runs, ErrorKind::invalid_input, "unequal run counts across taus");
    double s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (double t : taus) {
        s2 += t * t;
        s3 += t * t * t;
        s4 += t * t * t * t;
    }
    require(s2 > 0.0, ErrorKind::invalid_input, "tau grid must contain nonzero values");
    // Least squares through the origin, per sample: a = sum tau J / sum tau^2,
    // and for a tau + b tau^2 the 2x2 normal equations.
    const double det = s2 * s4 - s3 * s3;
    const bool quad = g >= 2 && det > 1e-14 * s2 * s4;

    std::vector<std::vector<double>> lin(runs), bq(runs);
    for (std::size_t r = 0; r < runs; ++r) {
        std::size_t len = std::numeric_limits<std::size_t>::max();
        for (std::size_t k = 0; k < g; ++k) len = std::min(len, current[k][r].size());
        lin[r].assign(len, 0.0);
        if (quad) bq[r].assign(len, 0.0);
        for (std::size_t k = 0; k < g; ++k) {
            const double t = taus[k];
            const double ca = t / s2;
            const double cb = quad ? (s2 * t * t - s3 * t) / det : 0.0;
            const auto& x = current[k][r];
            for (std::size_t i = 0; i < len; ++i) {
                lin[r][i] += ca * x[i];
                if (quad) bq[r][i] += cb * x[i];
            }
        }
    }
    LinearResponseFit out;
    out.slope = batch_means(lin, batches);
    out.slope_significant = std::abs(out.slope.mean) > 3.0 * out.slope.error;
    if (quad) {
        out.quadratic = batch_means(bq, batches);
        out.nonlinear = std::abs(out.quadratic.mean) > 3.0 * out.quadratic.error;
    }
    return out;
}

LinearResponseFit linear_response_conductivity(const ModelParams& model,
                                               const DynamicsParams& dyn_template,
                                               const IntegrationSpec& spec,
                                               std::span<const double> taus,
                                               std::size_t trajectories, unsigned workers,
                                               std::size_t batches) {
    require(trajectories >= 1, ErrorKind::invalid_input, "need at least one trajectory");
    const std::size_t g = taus.size();
    auto runs = run_ensemble<std::vector<double>>(g * trajectories, workers, [&](std::size_t job) {
        DynamicsParams dyn = dyn_template;
        dyn.tau = taus[job / trajectories];
        IntegrationSpec s = spec;
        s.trajectory_id = spec.trajectory_id + job % trajectories;
        return simulate(model, dyn, s).current_series();
    });
    std::vector<std::vector<std::vector<double>>> current(g);
    for (std::size_t k = 0; k < g; ++k)
        for (std::size_t r = 0; r < trajectories; ++r)
            current[k].push_back(std::move(runs[k * trajectories + r]));
    return linear_response_fit(taus, current, batches);
}

std::vector<MomentProbe> balance_probes() {
    return {probes::second_neighbour_gap_sq(), probes::q_q3(), probes::q3_q()};
}

namespace {

std::vector<std::vector<double>> per_sample(
    std::span<const ObservableSeries> ensemble,
    const std::function<std::vector<double>(const ObservableSeries&)>& make) {
    std::vector<std::vector<double>> runs;
    for (const auto& s : ensemble) runs.push_back(make(s));
    return runs;
}

}  // namespace

EstimateWithError current_balance_residual(std::span<const ObservableSeries> ensemble,
                                           std::size_t batches) {
    common_model(ensemble);
    return batch_means(per_sample(ensemble,
                                  [](const ObservableSeries& s) {
                                      require(s.model.periodic(), ErrorKind::unsupported_configuration,
                                              "current balance needs a periodic chain");
                                      const auto gap = moment_or_throw(s, "gap2_sq");
                                      const auto a = moment_or_throw(s, "q_q3");
                                      const auto b = moment_or_throw(s, "q3_q");
                                      const double w2 = s.model.omega * s.model.omega;
                                      const double damp = s.dyn.gamma + s.dyn.flip_rate;
                                      const double src = w2 * w2 * s.dyn.tau / (4.0 * s.dyn.temperature);
                                      const double quart = 0.5 * s.model.lambda * w2;
                                      std::vector<double> r(s.samples.size());
                                      for (std::size_t i = 0; i < r.size(); ++i)
                                          r[i] = -damp * s.samples[i].J + src * gap[i] +
                                                 quart * (a[i] - b[i]);
                                      return r;
                                  }),
                       batches);
}

EstimateWithError quartic_balance_term(std::span<const ObservableSeries> ensemble,
                                       std::size_t batches) {
    common_model(ensemble);
    return batch_means(per_sample(ensemble,
                                  [](const ObservableSeries& s) {
                                      const auto a = moment_or_throw(s, "q_q3");
                                      const auto b = moment_or_throw(s, "q3_q");
                                      const double quart =
                                          0.5 * s.model.lambda * s.model.omega * s.model.omega;
                                      std::vector<double> r(a.size());
                                      for (std::size_t i = 0; i < r.size(); ++i)
                                          r[i] = quart * (a[i] - b[i]);
                                      return r;
                                  }),
                       batches);
}

std::vector<JhatEstimate> jhat_spectrum(std::span<const ObservableSeries> ensemble,
                                        std::span<const std::ptrdiff_t> shifts,
                                        std::size_t batches) {
    common_model(ensemble);
    std::vector<JhatEstimate> out;
    for (std::ptrdiff_t l : shifts) {
        const std::string name = "p_q[" + std::to_string(l) + "]";
        out.push_back({l, batch_means(per_sample(ensemble,
                                                 [&](const ObservableSeries& s) {
                                                     auto v = moment_or_throw(s, name);
                                                     const double w2 = s.model.omega * s.model.omega;
                                                     for (double& x : v) x *= w2;
                                                     return v;
                                                 }),
                                      batches)});
    }
    return out;
}

EstimateWithError jhat_current_gap(std::span<const ObservableSeries> ensemble,
                                   std::size_t batches) {
    common_model(ensemble);
    return batch_means(per_sample(ensemble,
                                  [](const ObservableSeries& s) {
                                      auto v = moment_or_throw(s, "p_q[1]");
                                      const double w2 = s.model.omega * s.model.omega;
                                      for (std::size_t i = 0; i < v.size(); ++i)
                                          v[i] = w2 * v[i] - s.samples[i].J;
                                      return v;
                                  }),
                       batches);
}

ActionPath ActionPath::reversed() const {
    ActionPath r;
    r.t_left = t_left;
    r.t_right = t_right;
    r.h_initial = h_final;
    r.h_final = h_initial;
    const std::size_t n = segment_dt.size();
    r.segment_dt.assign(segment_dt.rbegin(), segment_dt.rend());
    r.j_start.resize(n);
    r.j_end.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t src = n - 1 - s;
        r.j_start[s] = j_end[src];
        r.j_end[s] = j_start[src];
        for (double& v : r.j_start[s]) v = -v;
        for (double& v : r.j_end[s]) v = -v;
    }
    return r;
}

std::vector<double> ActionPath::current_integrals() const {
    const std::size_t bonds = sites() >= 1 ? sites() - 1 : 0;
    std::vector<double> out(bonds, 0.0);
    for (std::size_t s = 0; s < segment_dt.size(); ++s)
        for (std::size_t b = 0; b < bonds; ++b)
            out[b] += 0.5 * segment_dt[s] * (j_start[s][b] + j_end[s][b]);
    return out;
}

ActionPath record_action_path(const ModelParams& model, const DynamicsParams& dyn,
                              const IntegrationSpec& spec) {
    require(!model.periodic(), ErrorKind::unsupported_configuration,
            "the action functional is defined for the open chain");
    model.validate();
    dyn.validate(model);
    spec.validate(model);
    RandomStream rng(spec.seed, spec.trajectory_id);
    ChainState state = initial_state(model, dyn, rng);
    Integrator integ(model, dyn, spec.dt);
    for (std::uint64_t i = 0; i < spec.burn_in_steps; ++i) integ.step(state, rng);

    ActionPath path;
    path.t_left = dyn.bath_temperature(model, 0);
    path.t_right = dyn.bath_temperature(model, model.size - 1);
    path.h_initial = local_energies(state, model);
    const std::uint64_t n = spec.recorded_steps();
    path.segment_dt.assign(n, spec.dt);
    path.j_start.reserve(n);
    path.j_end.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        integ.step_with_hook(state, rng, [&](const ChainState& a, const ChainState& b) {
            path.j_start.push_back(bond_currents(a, model));
            path.j_end.push_back(bond_currents(b, model));
        });
    }
    path.h_final = local_energies(state, model);
    return path;
}

double action_functional_global(const ActionPath& path) {
    const std::size_t n = path.sites();
    require(n >= 2, ErrorKind::invalid_input, "action path needs at least two sites");
    const auto I = path.current_integrals();
    const double dh_first = path.h_final[0] - path.h_initial[0];
    const double dh_last = path.h_final[n - 1] - path.h_initial[n - 1];
    return (I[0] - dh_first) / path.t_left + (-I[n - 2] - dh_last) / path.t_right;
}

ActionFunctionalReport action_functional_check(const ActionPath& path, std::span<const double> K) {
    const std::size_t n = path.sites();
    require(K.size() == n, ErrorKind::invalid_profile,
            "K profile has " + std::to_string(K.size()) + " entries for " + std::to_string(n) +
                " sites");
    require(K.front() == path.t_left && K.back() == path.t_right, ErrorKind::invalid_profile,
            "K profile must start at T_L and end at T_R");
    for (double k : K)
        require(std::isfinite(k) && k > 0.0, ErrorKind::invalid_profile, "K entries must be > 0");

    ActionFunctionalReport rep;
    rep.K.assign(K.begin(), K.end());
    rep.R_global = action_functional_global(path);
    const auto I = path.current_integrals();
    double local = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) local += (1.0 / K[i] - 1.0 / K[i + 1]) * I[i];
    for (std::size_t i = 0; i < n; ++i) local -= (path.h_final[i] - path.h_initial[i]) / K[i];
    rep.R_local = local;
    rep.residual = std::abs(rep.R_global - rep.R_local);
    return rep;
}

}  // namespace nesslab
