#include "fast/freq_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fast/errors.hpp"
#include "fast/parallel.hpp"
#include "fast/rng.hpp"

namespace fast {

namespace {

constexpr double kTinyWeight = 1e-300;

struct BandRange {
  double lo;
  double hi;  // +inf for the high band
};

BandRange band_range(Band band, const BandThresholds& thr) {
  switch (band) {
    case Band::low: return {0.0, thr.low_mid};
    case Band::mid: return {thr.low_mid, thr.mid_high};
    default: return {thr.mid_high, std::numeric_limits<double>::infinity()};
  }
}

Eigen::MatrixXd gaussian_draws(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Eigen::MatrixXd z(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  return z;
}

// Mean L_CF over the draws that land inside the band; 0 when none do.
double band_objective(const Eigen::MatrixXd& z, const Eigen::VectorXd& scales,
                      const BandRange& range, const Eigen::MatrixXd& reference,
                      const Eigen::MatrixXd& coreset, const PhasePenaltyParams& penalty) {
  const Eigen::MatrixXd t = z * scales.asDiagonal();
  std::vector<Eigen::Index> accepted;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const double norm = t.row(i).norm();
    if (norm >= range.lo && norm < range.hi) accepted.push_back(i);
  }
  if (accepted.empty()) return 0.0;

  Eigen::MatrixXd omegas(static_cast<Eigen::Index>(accepted.size()), t.cols());
  for (Eigen::Index i = 0; i < omegas.rows(); ++i)
    omegas.row(i) = t.row(accepted[static_cast<std::size_t>(i)]);

  Eigen::VectorXd re_c, im_c, re_r, im_r;
  ecf_batch(coreset, omegas, re_c, im_c);
  ecf_batch(reference, omegas, re_r, im_r);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < omegas.rows(); ++j)
    acc += pd_loss_from_cf(re_c(j), im_c(j), re_r(j), im_r(j), omegas.row(j).squaredNorm(),
                           penalty);
  return acc / static_cast<double>(omegas.rows());
}

}  // namespace

const char* band_name(Band b) {
  switch (b) {
    case Band::low: return "low";
    case Band::mid: return "mid";
    default: return "high";
  }
}

const char* strategy_name(FreqStrategy s) {
  switch (s) {
    case FreqStrategy::pdas: return "pdas";
    case FreqStrategy::uniform: return "uniform";
    case FreqStrategy::topk: return "topk";
    default: return "collinear";
  }
}

FreqStrategy strategy_from_name(const std::string& name) {
  if (name == "pdas") return FreqStrategy::pdas;
  if (name == "uniform") return FreqStrategy::uniform;
  if (name == "topk") return FreqStrategy::topk;
  if (name == "collinear") return FreqStrategy::collinear;
  throw InvalidParameterError("unknown frequency strategy: " + name);
}

double FrequencyLibrary::min_norm() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& a : atoms) m = std::min(m, a.norm);
  return m;
}

double FrequencyLibrary::max_norm() const {
  double m = 0.0;
  for (const auto& a : atoms) m = std::max(m, a.norm);
  return m;
}

Eigen::MatrixXd FrequencyLibrary::omegas(const std::vector<int>& ids) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), dim());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = atoms[static_cast<std::size_t>(ids[i])].omega;
  return out;
}

std::string FrequencyLibrary::audit_text() const {
  std::ostringstream os;
  os.precision(9);
  for (const auto& a : atoms) {
    os << band_name(a.band) << ' ' << a.norm;
    for (Eigen::Index j = 0; j < a.omega.size(); ++j) os << ' ' << a.omega(j);
    os << '\n';
  }
  return os.str();
}

Eigen::VectorXd pilot_scales(const Eigen::MatrixXd& reference) {
  const Eigen::Index n = reference.rows();
  if (n < 2) throw InvalidParameterError("pilot_scales: need at least 2 reference rows");
  const Eigen::RowVectorXd mean = reference.colwise().mean();
  const Eigen::RowVectorXd var =
      (reference.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n - 1);
  Eigen::VectorXd scales(reference.cols());
  const double floor_std = 1e-9;
  for (Eigen::Index j = 0; j < scales.size(); ++j)
    scales(j) = 1.0 / (std::sqrt(var(j)) + floor_std);
  return scales;
}

BandThresholds band_thresholds(const Eigen::VectorXd& pilot, int pilot_samples,
                               std::uint64_t seed) {
  if (pilot_samples < 16) throw InvalidParameterError("band_thresholds: too few pilot samples");
  Rng rng(derive_seed(seed, "band-pilot"));
  std::vector<double> norms(static_cast<std::size_t>(pilot_samples));
  const Eigen::Index d = pilot.size();
  for (auto& nrm : norms) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double t = pilot(j) * rng.normal();
      sq += t * t;
    }
    nrm = std::sqrt(sq);
  }
  std::sort(norms.begin(), norms.end());
  const auto pct = [&](double q) {
    return norms[static_cast<std::size_t>(q * (norms.size() - 1))];
  };
  BandThresholds thr{pct(0.33), pct(0.67)};
  if (!(thr.low_mid > 0.0) || !(thr.mid_high > thr.low_mid))
    throw NumericError("band_thresholds: degenerate pilot norm distribution");
  return thr;
}

Eigen::VectorXd optimize_band_scales(const Eigen::MatrixXd& reference,
                                     const Eigen::MatrixXd& init_coreset, Band band,
                                     const BandThresholds& thresholds,
                                     const Eigen::VectorXd& init_scales,
                                     const PhasePenaltyParams& penalty, const AflConfig& cfg,
                                     std::uint64_t seed) {
  if ((init_scales.array() <= 0.0).any())
    throw InvalidParameterError("optimize_band_scales: scales must be positive");
  const Eigen::Index d = init_scales.size();
  const BandRange range = band_range(band, thresholds);

  Rng rng(derive_seed(seed, "afl-mc"));
  const Eigen::MatrixXd z = gaussian_draws(cfg.n_mc, d, rng);  // common random numbers

  const auto objective = [&](const Eigen::VectorXd& s) {
    return band_objective(z, s, range, reference, init_coreset, penalty);
  };

  // Zero acceptance with the initial scales: center the band isotropically.
  {
    const Eigen::MatrixXd t = z * init_scales.asDiagonal();
    bool any = false;
    for (Eigen::Index i = 0; i < t.rows() && !any; ++i) {
      const double norm = t.row(i).norm();
      any = norm >= range.lo && norm < range.hi;
    }
    if (!any) {
      const double hi = std::isfinite(range.hi) ? range.hi : 1.5 * range.lo;
      const double center = 0.5 * (range.lo + hi);
      return Eigen::VectorXd::Constant(d, center / std::sqrt(static_cast<double>(d)));
    }
  }

  Eigen::VectorXd log_s = init_scales.array().log();
  const Eigen::VectorXd log_lo = log_s.array() + std::log(cfg.scale_min_factor);
  const Eigen::VectorXd log_hi = log_s.array() + std::log(cfg.scale_max_factor);

  Eigen::VectorXd best = init_scales;
  double best_obj = objective(init_scales);

  // Coarse isotropic sweep before the per-dimension ascent; the local
  // gradient is unreliable when the conditional objective is nearly flat
  // around the pilot scales.
  for (double offset : {-1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0}) {
    const Eigen::VectorXd cand_log =
        (log_s.array() + offset).cwiseMax(log_lo.array()).cwiseMin(log_hi.array());
    const Eigen::VectorXd cand = cand_log.array().exp();
    const double obj = objective(cand);
    if (obj > best_obj) {
      best_obj = obj;
      best = cand;
    }
  }
  log_s = best.array().log();

  double step = cfg.ascent_step;
  const double fd_delta = 0.1;

  for (int it = 0; it < cfg.n_opt; ++it) {
    Eigen::VectorXd grad(d);
    parallel_for(static_cast<std::size_t>(d), [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        Eigen::VectorXd up = log_s, down = log_s;
        up(static_cast<Eigen::Index>(j)) += fd_delta;
        down(static_cast<Eigen::Index>(j)) -= fd_delta;
        grad(static_cast<Eigen::Index>(j)) =
            (objective(up.array().exp()) - objective(down.array().exp())) / (2.0 * fd_delta);
      }
    });
    const double gnorm = grad.norm();
    if (gnorm < 1e-14) break;  // flat objective (e.g. identical sets)

    Eigen::VectorXd candidate =
        (log_s + (step / gnorm) * grad).cwiseMax(log_lo).cwiseMin(log_hi);
    const double obj = objective(candidate.array().exp());
    if (obj > best_obj) {
      best_obj = obj;
      best = candidate.array().exp();
      log_s = candidate;
    } else {
      step *= 0.7;
      if (step < 1e-3) break;
    }
  }
  return best;
}

FrequencyLibrary build_library(const Eigen::VectorXd& scale_low, const Eigen::VectorXd& scale_mid,
                               const Eigen::VectorXd& scale_high, const BandThresholds& thresholds,
                               int n_lib, double split_low, double split_mid, std::uint64_t seed,
                               int reject_factor) {
  const Eigen::Index d = scale_low.size();
  if (scale_mid.size() != d || scale_high.size() != d)
    throw InvalidParameterError("build_library: scale dimension mismatch");
  if ((scale_low.array() <= 0.0).any() || (scale_mid.array() <= 0.0).any() ||
      (scale_high.array() <= 0.0).any())
    throw InvalidParameterError("build_library: scales must be positive");
  if (split_low <= 0.0 || split_mid <= 0.0 || split_low + split_mid >= 1.0)
    throw InvalidParameterError("build_library: band split must be positive with room for high");

  const int n_low = static_cast<int>(std::lround(split_low * n_lib));
  const int n_mid = static_cast<int>(std::lround(split_mid * n_lib));
  const int n_high = n_lib - n_low - n_mid;
  if (n_low < 1 || n_mid < 1 || n_high < 1)
    throw InvalidParameterError("build_library: n_lib too small for the band split");

  FrequencyLibrary lib;
  lib.thresholds = thresholds;
  lib.scale_low = scale_low;
  lib.scale_mid = scale_mid;
  lib.scale_high = scale_high;
  lib.rng_seed = seed;
  lib.atoms.reserve(static_cast<std::size_t>(n_lib));

  Rng rng(derive_seed(seed, "library"));
  const struct {
    Band band;
    const Eigen::VectorXd* scales;
    int want;
  } plan[] = {{Band::low, &scale_low, n_low},
              {Band::mid, &scale_mid, n_mid},
              {Band::high, &scale_high, n_high}};

  for (const auto& p : plan) {
    const BandRange range = band_range(p.band, thresholds);
    int accepted = 0;
    long attempts = 0;
    const long budget = static_cast<long>(reject_factor) * p.want;
    while (accepted < p.want) {
      if (++attempts > budget)
        throw NumericError(std::string("build_library: rejection budget exhausted for band ") +
                           band_name(p.band));
      Eigen::VectorXd omega(d);
      for (Eigen::Index j = 0; j < d; ++j) omega(j) = (*p.scales)(j) * rng.normal();
      const double norm = omega.norm();
      if (norm < range.lo || norm >= range.hi) continue;
      FrequencyAtom atom;
      atom.omega = std::move(omega);
      atom.norm = norm;
      atom.band = p.band;
      lib.atoms.push_back(std::move(atom));
      ++accepted;
    }
  }
  return lib;
}

void attach_reference_cache(FrequencyLibrary& library, const Eigen::MatrixXd& reference) {
  Eigen::MatrixXd omegas(static_cast<Eigen::Index>(library.atoms.size()), library.dim());
  for (std::size_t i = 0; i < library.atoms.size(); ++i)
    omegas.row(static_cast<Eigen::Index>(i)) = library.atoms[i].omega;
  ecf_batch(reference, omegas, library.ref_re, library.ref_im);
}

CurriculumSchedule make_schedule(const FrequencyLibrary& library, double ramp_fraction,
                                 int total_iters) {
  if (ramp_fraction <= 0.0 || ramp_fraction > 1.0)
    throw InvalidParameterError("make_schedule: ramp_fraction must lie in (0,1]");
  if (total_iters < 1) throw InvalidParameterError("make_schedule: total_iters must be >= 1");
  CurriculumSchedule s;
  s.tau_low = std::max(library.thresholds.low_mid, library.min_norm());
  s.tau_max = std::max(library.max_norm(), s.tau_low);
  s.ramp_fraction = ramp_fraction;
  s.total_iters = total_iters;
  return s;
}

double tau_at(const CurriculumSchedule& schedule, int t) {
  if (t < 0) throw InvalidParameterError("tau_at: negative iteration");
  const double ramp_end = schedule.ramp_fraction * schedule.total_iters;
  if (t >= ramp_end || ramp_end <= 0.0) return schedule.tau_max;
  return schedule.tau_low + (schedule.tau_max - schedule.tau_low) * (t / ramp_end);
}

std::vector<int> pool_indices(const FrequencyLibrary& library, double tau) {
  std::vector<int> pool;
  for (std::size_t i = 0; i < library.atoms.size(); ++i)
    if (library.atoms[i].norm <= tau) pool.push_back(static_cast<int>(i));
  return pool;
}

void refresh_scores(FrequencyLibrary& library, const std::vector<int>& pool,
                    const Eigen::MatrixXd& coreset, const PhasePenaltyParams& penalty) {
  if (!library.has_reference_cache())
    throw InvalidParameterError("refresh_scores: reference cache not attached");
  if (pool.empty()) return;
  const Eigen::MatrixXd omegas = library.omegas(pool);
  Eigen::VectorXd re_c, im_c;
  ecf_batch(coreset, omegas, re_c, im_c);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const int id = pool[i];
    const auto j = static_cast<Eigen::Index>(i);
    library.atoms[static_cast<std::size_t>(id)].score =
        pd_loss_from_cf(re_c(j), im_c(j), library.ref_re(id), library.ref_im(id),
                        omegas.row(j).squaredNorm(), penalty);
  }
}

Eigen::VectorXd selection_weights(const FrequencyLibrary& library,
                                  const std::vector<int>& remaining,
                                  const std::vector<int>& chosen) {
  const Eigen::Index n = static_cast<Eigen::Index>(remaining.size());
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& atom = library.atoms[static_cast<std::size_t>(remaining[static_cast<std::size_t>(i)])];
    double diversity = 1.0;
    for (int c : chosen) {
      const auto& other = library.atoms[static_cast<std::size_t>(c)];
      const double denom = atom.norm * other.norm;
      if (denom <= 0.0) continue;
      const double cosine = std::abs(atom.omega.dot(other.omega)) / denom;
      diversity = std::min(diversity, 1.0 - std::min(cosine, 1.0));
    }
    w(i) = std::max(atom.score, 0.0) * std::max(diversity, 0.0);
  }
  const double total = w.sum();
  if (total <= kTinyWeight) return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return w / total;
}

std::vector<int> pdas_sample(FrequencyLibrary& library, const CurriculumSchedule& schedule, int t,
                             int batch_k, const Eigen::MatrixXd& coreset,
                             const Eigen::MatrixXd& reference, const PhasePenaltyParams& penalty,
                             std::uint64_t seed) {
  if (batch_k < 1) throw InvalidParameterError("pdas_sample: batch_k must be >= 1");
  if (!library.has_reference_cache()) attach_reference_cache(library, reference);

  const double tau = tau_at(schedule, t);
  std::vector<int> pool = pool_indices(library, tau);
  if (pool.empty()) throw InvalidParameterError("pdas_sample: empty candidate pool");
  refresh_scores(library, pool, coreset, penalty);

  Rng rng(derive_seed(seed, "pdas", static_cast<std::uint64_t>(t)));
  std::vector<int> chosen;
  const int want = std::min<int>(batch_k, static_cast<int>(pool.size()));
  chosen.reserve(static_cast<std::size_t>(want));
  std::vector<int> remaining = pool;
  while (static_cast<int>(chosen.size()) < want) {
    const Eigen::VectorXd probs = selection_weights(library, remaining, chosen);
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = remaining.size() - 1;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      cum += probs(static_cast<Eigen::Index>(i));
      if (u < cum) {
        pick = i;
        break;
      }
    }
    chosen.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return chosen;
}

std::vector<int> lowest_norm_atoms(const FrequencyLibrary& library, int batch_k) {
  std::vector<int> ids(library.atoms.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return library.atoms[static_cast<std::size_t>(a)].norm <
           library.atoms[static_cast<std::size_t>(b)].norm;
  });
  ids.resize(static_cast<std::size_t>(std::min<int>(batch_k, static_cast<int>(ids.size()))));
  return ids;
}

Eigen::MatrixXd strategy_batch(FrequencyLibrary& library, FreqStrategy strategy,
                               const CurriculumSchedule& schedule, int t, int batch_k,
                               const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                               const PhasePenaltyParams& penalty, std::uint64_t seed) {
  switch (strategy) {
    case FreqStrategy::pdas:
      return library.omegas(
          pdas_sample(library, schedule, t, batch_k, coreset, reference, penalty, seed));
    case FreqStrategy::uniform: {
      const int n = static_cast<int>(library.atoms.size());
      const int want = std::min(batch_k, n);
      Rng rng(derive_seed(seed, "uniform", static_cast<std::uint64_t>(t)));
      std::vector<int> ids(static_cast<std::size_t>(n));
      std::iota(ids.begin(), ids.end(), 0);
      for (int i = 0; i < want; ++i) {
        const auto j = i + static_cast<int>(rng.index(static_cast<std::size_t>(n - i)));
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
      }
      ids.resize(static_cast<std::size_t>(want));
      return library.omegas(ids);
    }
    case FreqStrategy::topk: {
      if (!library.has_reference_cache()) attach_reference_cache(library, reference);
      const int n = static_cast<int>(library.atoms.size());
      std::vector<int> ids(static_cast<std::size_t>(n));
      std::iota(ids.begin(), ids.end(), 0);
      std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        const double aa = std::hypot(library.ref_re(a), library.ref_im(a));
        const double ab = std::hypot(library.ref_re(b), library.ref_im(b));
        return aa > ab;
      });
      ids.resize(static_cast<std::size_t>(std::min(batch_k, n)));
      return library.omegas(ids);
    }
    default: {  // collinear worst case: fixed direction, spread magnitudes
      Rng rng(derive_seed(seed, "collinear"));
      Eigen::VectorXd dir(library.dim());
      for (Eigen::Index j = 0; j < dir.size(); ++j) dir(j) = rng.normal();
      dir.normalize();
      Eigen::MatrixXd omegas(batch_k, library.dim());
      const double lo = schedule.tau_low;
      const double hi = schedule.tau_max;
      for (int i = 0; i < batch_k; ++i) {
        const double mag =
            batch_k == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (batch_k - 1);
        omegas.row(i) = (mag * dir).transpose();
      }
      return omegas;
    }
  }
}

}  // namespace fast
