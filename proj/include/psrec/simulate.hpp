#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "psrec/classes.hpp"
#include "psrec/errors.hpp"
#include "psrec/events.hpp"
#include "psrec/random.hpp"

namespace psrec {

// Synthetic observation generator. A scene is a flat Poisson background plus
// elliptical-Gaussian sources, each photon carrying an energy drawn from the
// source's spectral model over the working band [0.5, 3.0] keV:
//
//   power law  dN/dE ~ E^-p          (point sources, default p = 1.7)
//   thermal    dN/dE ~ exp(-E / kT)  (extended emission, default kT = 1.0)
//   flat       dN/dE ~ 1             (instrumental background)
//
// Everything is drawn from one per-scene stream, so a scene is a pure
// function of its spec.

inline constexpr double kEnergyLo = 0.5;
inline constexpr double kEnergyHi = 3.0;

enum class SourceKind { Point, Extended };
enum class SpectrumModel { PowerLaw, Thermal, Flat };

struct SourceSpec {
  SourceKind kind = SourceKind::Point;
  double cx = 0.0;
  double cy = 0.0;
  double total_counts = 0.0;      // expected photons, Poisson-fluctuated per scene
  double sigma_major = 1.5;       // Gaussian axes in pixels
  double sigma_minor = 1.5;
  double angle = 0.0;             // major-axis angle, radians
  SpectrumModel spectrum = SpectrumModel::PowerLaw;
  double spectrum_param = 1.7;    // power-law index or kT in keV; unused for flat
};

struct SceneSpec {
  int width = 128;
  int height = 128;
  double bkg_rate = 0.1;          // expected background photons per pixel
  double bright_threshold = 200.0;  // expected counts at or above label a point source bright
  std::uint64_t seed = 0;
  std::vector<SourceSpec> sources;
};

struct SimulatedScene {
  EventTable events;
  std::vector<TruthSource> truth;
};

inline void validate_scene(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw DomainError("SceneSpec: extent must be positive");
  if (spec.bkg_rate < 0.0) throw DomainError("SceneSpec: bkg_rate must be >= 0");
  if (!(spec.bright_threshold > 0.0))
    throw DomainError("SceneSpec: bright_threshold must be > 0");
  for (const SourceSpec& s : spec.sources) {
    if (s.cx < 0.0 || s.cx >= spec.width || s.cy < 0.0 || s.cy >= spec.height)
      throw BoundsError("SourceSpec: center outside scene extent");
    if (!(s.total_counts > 0.0)) throw DomainError("SourceSpec: total_counts must be > 0");
    if (!(s.sigma_minor > 0.0) || s.sigma_minor > s.sigma_major)
      throw DomainError("SourceSpec: need 0 < sigma_minor <= sigma_major");
    if (s.kind == SourceKind::Point && s.sigma_major > 2.5)
      throw DomainError("SourceSpec: point sources must have sigma_major <= 2.5 px");
    if (s.kind == SourceKind::Extended && s.sigma_major < 6.0)
      throw DomainError("SourceSpec: extended sources must have sigma_major >= 6 px");
    if (s.spectrum == SpectrumModel::Thermal && !(s.spectrum_param > 0.0))
      throw DomainError("SourceSpec: thermal kT must be > 0");
  }
}

namespace detail {

// Inverse-CDF draw from E^-p restricted to [kEnergyLo, kEnergyHi).
inline double sample_powerlaw(Rng& rng, double index) {
  const double u = rng.uniform01();
  if (std::fabs(index - 1.0) < 1e-12) {
    return kEnergyLo * std::exp(u * std::log(kEnergyHi / kEnergyLo));
  }
  const double q = 1.0 - index;
  const double lo_q = std::pow(kEnergyLo, q);
  const double hi_q = std::pow(kEnergyHi, q);
  return std::pow(lo_q + u * (hi_q - lo_q), 1.0 / q);
}

// Inverse-CDF draw from exp(-E/kT) restricted to [kEnergyLo, kEnergyHi).
inline double sample_thermal(Rng& rng, double kt) {
  const double u = rng.uniform01();
  const double lo_e = std::exp(-kEnergyLo / kt);
  const double hi_e = std::exp(-kEnergyHi / kt);
  return -kt * std::log(lo_e - u * (lo_e - hi_e));
}

inline double sample_energy(Rng& rng, SpectrumModel model, double param) {
  switch (model) {
    case SpectrumModel::PowerLaw: return sample_powerlaw(rng, param);
    case SpectrumModel::Thermal: return sample_thermal(rng, param);
    case SpectrumModel::Flat: return rng.uniform(kEnergyLo, kEnergyHi);
  }
  throw DomainError("SpectrumModel: invalid enumerator");
}

}  // namespace detail

inline ObjectClass truth_class(const SourceSpec& s, double bright_threshold) {
  if (s.kind == SourceKind::Extended) return ObjectClass::BrightBkg;
  return s.total_counts >= bright_threshold ? ObjectClass::BrightPs : ObjectClass::FaintPs;
}

inline SimulatedScene simulate(const SceneSpec& spec) {
  validate_scene(spec);
  Rng rng(spec.seed);
  std::vector<Event> events;

  // Background: homogeneous Poisson field with flat spectrum.
  const double area = static_cast<double>(spec.width) * static_cast<double>(spec.height);
  const std::int64_t n_bkg = rng.poisson(spec.bkg_rate * area);
  events.reserve(static_cast<std::size_t>(n_bkg));
  for (std::int64_t k = 0; k < n_bkg; ++k) {
    Event e;
    e.x = rng.uniform(0.0, spec.width);
    e.y = rng.uniform(0.0, spec.height);
    e.energy = rng.uniform(kEnergyLo, kEnergyHi);
    events.push_back(e);
  }

  // Sources, in spec order. Photons falling off the detector are redrawn so
  // a source near the border keeps its expected on-detector profile shape.
  std::vector<TruthSource> truth;
  truth.reserve(spec.sources.size());
  for (const SourceSpec& s : spec.sources) {
    const double cos_a = std::cos(s.angle), sin_a = std::sin(s.angle);
    const std::int64_t n_src = rng.poisson(s.total_counts);
    for (std::int64_t k = 0; k < n_src; ++k) {
      Event e;
      do {
        const double u = rng.normal() * s.sigma_major;
        const double v = rng.normal() * s.sigma_minor;
        e.x = s.cx + u * cos_a - v * sin_a;
        e.y = s.cy + u * sin_a + v * cos_a;
      } while (e.x < 0.0 || e.x >= spec.width || e.y < 0.0 || e.y >= spec.height);
      e.energy = detail::sample_energy(rng, s.spectrum, s.spectrum_param);
      events.push_back(e);
    }
    truth.push_back(TruthSource{s.cx, s.cy, truth_class(s, spec.bright_threshold)});
  }

  return SimulatedScene{EventTable(spec.width, spec.height, std::move(events)),
                        std::move(truth)};
}

// ---------------------------------------------------------------------------
// Benchmark: a reproducible set of scenes for training and evaluation.

struct Benchmark {
  std::vector<SceneSpec> train;
  std::vector<SceneSpec> test;
};

inline constexpr std::uint64_t kDefaultMasterSeed = 20177;
inline constexpr int kBenchmarkScenes = 25;
inline constexpr int kBenchmarkTrainScenes = 20;

namespace detail {

inline SceneSpec benchmark_scene(std::uint64_t master_seed, int index) {
  SceneSpec spec;
  spec.width = 192;
  spec.height = 192;
  spec.bkg_rate = 0.1;
  spec.seed = mix_seed(master_seed, static_cast<std::uint64_t>(index) * 2 + 1);

  Rng rng(mix_seed(master_seed, static_cast<std::uint64_t>(index) * 2));

  // Candidate centers on a jittered grid, pitch 24, so any two sources stay
  // at least 16 px apart (twice the default peak separation radius).
  std::vector<std::pair<double, double>> slots;
  for (int r = 16; r <= 176; r += 24)
    for (int c = 16; c <= 176; c += 24) slots.emplace_back(static_cast<double>(r), static_cast<double>(c));
  for (std::size_t i = slots.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(slots[i - 1], slots[j]);
  }

  const int n_extended = 1 + static_cast<int>(rng.uniform_int(0, 1));
  const int n_point = 19 + static_cast<int>(rng.uniform_int(0, 2));

  std::size_t cursor = 0;
  const auto next_slot = [&](bool interior) {
    while (cursor < slots.size()) {
      const auto [r, c] = slots[cursor++];
      if (!interior || (r >= 40.0 && r <= 152.0 && c >= 40.0 && c <= 152.0))
        return std::make_pair(r, c);
    }
    throw DomainError("benchmark_scene: ran out of placement slots");
  };

  for (int k = 0; k < n_extended; ++k) {
    const auto [r, c] = next_slot(true);
    SourceSpec s;
    s.kind = SourceKind::Extended;
    s.cy = r + rng.uniform(-4.0, 4.0);
    s.cx = c + rng.uniform(-4.0, 4.0);
    s.total_counts = rng.uniform(2200.0, 3600.0);
    s.sigma_major = rng.uniform(8.0, 13.0);
    s.sigma_minor = s.sigma_major * rng.uniform(0.8, 1.0);
    s.angle = rng.uniform(0.0, 3.141592653589793);
    s.spectrum = SpectrumModel::Thermal;
    s.spectrum_param = 1.0;
    spec.sources.push_back(s);
  }
  for (int k = 0; k < n_point; ++k) {
    const auto [r, c] = next_slot(false);
    SourceSpec s;
    s.kind = SourceKind::Point;
    s.cy = r + rng.uniform(-4.0, 4.0);
    s.cx = c + rng.uniform(-4.0, 4.0);
    const bool bright = rng.uniform01() < 0.45;
    s.total_counts = bright ? rng.uniform(260.0, 600.0) : rng.uniform(80.0, 160.0);
    s.sigma_major = rng.uniform(1.0, 1.8);
    s.sigma_minor = s.sigma_major * rng.uniform(0.75, 1.0);
    s.angle = rng.uniform(0.0, 3.141592653589793);
    s.spectrum = SpectrumModel::PowerLaw;
    s.spectrum_param = 1.7;
    spec.sources.push_back(s);
  }
  return spec;
}

}  // namespace detail

// n_scenes scenes derived from one master seed, first ~80% train, rest test
// (25 scenes split 20/5). The per-point-source count ranges sit either side
// of the bright threshold (faint 80..160, bright 260..600) so the
// bright/faint truth labels never straddle the boundary.
inline Benchmark default_benchmark(std::uint64_t master_seed = kDefaultMasterSeed,
                                   int n_scenes = kBenchmarkScenes) {
  if (n_scenes < 2) throw DomainError("default_benchmark: need at least 2 scenes");
  const int n_train = std::clamp(static_cast<int>(std::lround(0.8 * n_scenes)), 1, n_scenes - 1);
  Benchmark bench;
  for (int i = 0; i < n_scenes; ++i) {
    SceneSpec spec = detail::benchmark_scene(master_seed, i);
    if (i < n_train)
      bench.train.push_back(std::move(spec));
    else
      bench.test.push_back(std::move(spec));
  }
  return bench;
}

// ---------------------------------------------------------------------------
// Training-label sampling.

struct LabelPolicy {
  int n_faint_bkg = 150;   // faint-background labels per scene (includes hard negatives)
  int n_hard_bkg = 30;     // of which: brightest source-free pixels
  int n_bright_bkg = 30;   // labels inside extended-source cores
  int snap_radius = 2;     // labels snap to the local count maximum within this radius
  double exclusion = 12.0; // min Chebyshev distance of background labels from any source
  int margin = 8;          // keep random labels this far from the image border
};

namespace detail {

// Local count maximum within Chebyshev `radius` of (row, col); row-major on
// ties so the snap is deterministic.
inline std::pair<int, int> snap_to_peak(const CountImage& image, int row, int col, int radius) {
  int best_r = row, best_c = col;
  std::int64_t best_v = -1;
  for (int i = std::max(0, row - radius); i <= std::min(image.rows() - 1, row + radius); ++i)
    for (int j = std::max(0, col - radius); j <= std::min(image.cols() - 1, col + radius); ++j)
      if (image(i, j) > best_v) {
        best_v = image(i, j);
        best_r = i;
        best_c = j;
      }
  return {best_r, best_c};
}

inline double exclusion_radius(const SourceSpec& s, const LabelPolicy& policy) {
  if (s.kind == SourceKind::Extended) return std::max(policy.exclusion, 3.0 * s.sigma_major);
  return policy.exclusion;
}

}  // namespace detail

// Builds the per-scene training labels:
//   * every planted source, snapped to its local count peak (that is where
//     detection would report it),
//   * n_bright_bkg positions inside extended-source cores,
//   * n_faint_bkg source-free positions, n_hard_bkg of them at the brightest
//     source-free pixels (stand-ins for the spurious fluctuations detection
//     occasionally reports), the rest uniform.
// Needs the scene's sources for the exclusion geometry, so it takes the
// SceneSpec alongside the simulation output.
inline std::vector<LabeledPosition> sample_training_labels(const SceneSpec& spec,
                                                           const CountImage& image,
                                                           const std::vector<TruthSource>& truth,
                                                           const LabelPolicy& policy,
                                                           std::uint64_t seed) {
  if (policy.n_faint_bkg < policy.n_hard_bkg || policy.n_hard_bkg < 0 || policy.n_bright_bkg < 0)
    throw DomainError("LabelPolicy: need n_faint_bkg >= n_hard_bkg >= 0 and n_bright_bkg >= 0");
  if (truth.size() != spec.sources.size())
    throw DimensionError("sample_training_labels: truth does not match scene sources");

  Rng rng(seed);
  std::vector<LabeledPosition> labels;

  // Planted sources.
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const int row = static_cast<int>(std::floor(truth[k].y));
    const int col = static_cast<int>(std::floor(truth[k].x));
    const auto [r, c] = detail::snap_to_peak(image, row, col, policy.snap_radius);
    labels.push_back(LabeledPosition{r, c, truth[k].object_class});
  }

  // Bright-background positions: Gaussian scatter inside extended cores.
  std::vector<std::size_t> extended;
  for (std::size_t k = 0; k < spec.sources.size(); ++k)
    if (spec.sources[k].kind == SourceKind::Extended) extended.push_back(k);
  if (!extended.empty()) {
    for (int n = 0; n < policy.n_bright_bkg; ++n) {
      const SourceSpec& s = spec.sources[extended[static_cast<std::size_t>(n) % extended.size()]];
      int row = 0, col = 0;
      for (int attempt = 0;; ++attempt) {
        if (attempt >= 1000)
          throw DomainError("sample_training_labels: cannot place bright background label");
        const double dr = rng.normal() * 0.5 * s.sigma_major;
        const double dc = rng.normal() * 0.5 * s.sigma_major;
        row = static_cast<int>(std::floor(s.cy + dr));
        col = static_cast<int>(std::floor(s.cx + dc));
        if (image.contains(row, col) && std::fabs(dr) <= s.sigma_major &&
            std::fabs(dc) <= s.sigma_major)
          break;
      }
      const auto [r, c] = detail::snap_to_peak(image, row, col, 1);
      labels.push_back(LabeledPosition{r, c, ObjectClass::BrightBkg});
    }
  }

  const auto source_free = [&](int row, int col) {
    for (const SourceSpec& s : spec.sources) {
      const double radius = detail::exclusion_radius(s, policy);
      if (std::max(std::fabs(row - s.cy), std::fabs(col - s.cx)) < radius) return false;
    }
    return true;
  };

  // Hard negatives: brightest source-free pixels, deterministic scan order.
  struct Bright {
    std::int64_t value;
    int row;
    int col;
  };
  std::vector<Bright> bright_pixels;
  for (int i = 0; i < image.rows(); ++i)
    for (int j = 0; j < image.cols(); ++j)
      if (image(i, j) > 0 && source_free(i, j)) bright_pixels.push_back({image(i, j), i, j});
  std::sort(bright_pixels.begin(), bright_pixels.end(), [](const Bright& a, const Bright& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  // Thin to one per separation neighborhood so the hard negatives do not all
  // sample the same fluctuation.
  std::vector<std::pair<int, int>> hard;
  for (const Bright& bp : bright_pixels) {
    if (static_cast<int>(hard.size()) >= policy.n_hard_bkg) break;
    bool clear = true;
    for (const auto& [hr, hc] : hard)
      if (std::max(std::abs(hr - bp.row), std::abs(hc - bp.col)) < 8) {
        clear = false;
        break;
      }
    if (clear) hard.emplace_back(bp.row, bp.col);
  }
  for (const auto& [r, c] : hard) labels.push_back(LabeledPosition{r, c, ObjectClass::FaintBkg});

  // Remaining faint-background labels: uniform source-free positions.
  const int n_random = policy.n_faint_bkg - static_cast<int>(hard.size());
  for (int n = 0; n < n_random; ++n) {
    int row = 0, col = 0;
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 10000)
        throw DomainError("sample_training_labels: cannot place faint background label");
      row = static_cast<int>(rng.uniform_int(policy.margin, image.rows() - 1 - policy.margin));
      col = static_cast<int>(rng.uniform_int(policy.margin, image.cols() - 1 - policy.margin));
      if (source_free(row, col)) break;
    }
    const auto [r, c] = detail::snap_to_peak(image, row, col, policy.snap_radius);
    labels.push_back(LabeledPosition{r, c, ObjectClass::FaintBkg});
  }

  return labels;
}

}  // namespace psrec
