#include "sfadapt/metrics.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "sfadapt/errors.hpp"

namespace sfa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_same_grid(const LabelMask& pred, const LabelMask& gt) {
  if (pred.grid() != gt.grid()) {
    throw InvalidArgument("prediction and ground truth grids differ");
  }
}

// Lower envelope of the parabolas h²(q - i)² + f[i] along one line. The
// breakpoint comparisons are cross-multiplied so no division is involved;
// with spacings whose squares are dyadic the result is exact.
struct Envelope {
  std::vector<long> v;
  std::vector<double> f;
  std::vector<double> out;

  void run(double h2, std::size_t n) {
    v.clear();
    auto a_of = [&](long i) { return f[static_cast<std::size_t>(i)] + h2 * double(i) * double(i); };
    for (long q = 0; q < static_cast<long>(n); ++q) {
      if (f[static_cast<std::size_t>(q)] == kInf) continue;
      const double aq = a_of(q);
      while (v.size() >= 2) {
        const long vk = v[v.size() - 1];
        const long vk1 = v[v.size() - 2];
        const double ak = a_of(vk);
        const double ak1 = a_of(vk1);
        if ((aq - ak) * double(vk - vk1) <= (ak - ak1) * double(q - vk)) {
          v.pop_back();
        } else {
          break;
        }
      }
      v.push_back(q);
    }
    if (v.empty()) {
      std::fill(out.begin(), out.begin() + static_cast<long>(n), kInf);
      return;
    }
    std::size_t k = 0;
    for (long q = 0; q < static_cast<long>(n); ++q) {
      while (k + 1 < v.size() &&
             a_of(v[k + 1]) - a_of(v[k]) < 2.0 * h2 * double(q) * double(v[k + 1] - v[k])) {
        ++k;
      }
      const double d = double(q - v[k]);
      out[static_cast<std::size_t>(q)] = h2 * d * d + f[static_cast<std::size_t>(v[k])];
    }
  }
};

// One separable pass along `axis` of a row-major array with extents `dims`.
void edt_pass(std::vector<double>& d2, const std::vector<std::size_t>& dims,
              std::size_t axis, double h, Exec exec) {
  const std::size_t n = dims[axis];
  std::size_t stride = 1;
  for (std::size_t a = axis + 1; a < dims.size(); ++a) stride *= dims[a];
  const std::size_t total = d2.size();
  const std::size_t lines = total / n;
  const double h2 = h * h;

  auto line_start = [&](std::size_t line) {
    const std::size_t inner = line % stride;
    const std::size_t outer = line / stride;
    return outer * stride * n + inner;
  };

  const int threads = exec == Exec::kParallel ? omp_get_max_threads() : 1;
#pragma omp parallel num_threads(threads)
  {
    Envelope env;
    env.f.resize(n);
    env.out.resize(n);
    env.v.reserve(n);
#pragma omp for schedule(static)
    for (long line = 0; line < static_cast<long>(lines); ++line) {
      const std::size_t base = line_start(static_cast<std::size_t>(line));
      for (std::size_t i = 0; i < n; ++i) env.f[i] = d2[base + i * stride];
      env.run(h2, n);
      for (std::size_t i = 0; i < n; ++i) d2[base + i * stride] = env.out[i];
    }
  }
}

double mean_distance(const std::vector<std::size_t>& from,
                     const std::vector<double>& to_d2) {
  double sum = 0.0;
  for (std::size_t v : from) sum += std::sqrt(to_d2[v]);
  return sum / static_cast<double>(from.size());
}

std::optional<double> asd_on(const LabelMask& pred, const LabelMask& gt, Label cls,
                             Exec exec) {
  const auto sp = surface_voxels(pred, cls);
  const auto sg = surface_voxels(gt, cls);
  if (sp.empty() || sg.empty()) return std::nullopt;
  const std::size_t n = pred.grid().voxel_count();
  std::vector<unsigned char> fp(n, 0), fg(n, 0);
  for (std::size_t v : sp) fp[v] = 1;
  for (std::size_t v : sg) fg[v] = 1;
  const auto to_pred = squared_distance_transform(pred.grid(), fp, exec);
  const auto to_gt = squared_distance_transform(gt.grid(), fg, exec);
  return (mean_distance(sp, to_gt) + mean_distance(sg, to_pred)) / 2.0;
}

LabelMask slice_of(const LabelMask& m, std::size_t z) {
  const Grid& g = m.grid();
  Grid plane{{g.dims[1], g.dims[2]}, {g.spacing[1], g.spacing[2]}};
  const std::size_t area = g.dims[1] * g.dims[2];
  const auto labels = m.labels();
  std::vector<Label> out(labels.begin() + static_cast<long>(z * area),
                         labels.begin() + static_cast<long>((z + 1) * area));
  return LabelMask(std::move(plane), std::move(out), {});
}

bool has_label(const LabelMask& m, Label cls) {
  const auto l = m.labels();
  return std::find(l.begin(), l.end(), cls) != l.end();
}

// Mean and population std of the sorted values, so the result is independent
// of input order.
std::pair<double, double> mean_std(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double x : values) sum += x;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

}  // namespace

double dice(const LabelMask& pred, const LabelMask& gt, Label cls) {
  check_same_grid(pred, gt);
  const auto a = pred.labels();
  const auto b = gt.labels();
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool in_a = a[i] == cls;
    const bool in_b = b[i] == cls;
    na += in_a;
    nb += in_b;
    both += in_a && in_b;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

const char* asd_mode_name(AsdMode m) {
  return m == AsdMode::kVolume ? "volume" : "slice";
}

std::vector<std::size_t> surface_voxels(const LabelMask& mask, Label cls) {
  const Grid& g = mask.grid();
  check_grid(g);
  const long nz = g.rank() == 3 ? static_cast<long>(g.dims[0]) : 1;
  const long ny = static_cast<long>(g.dims[g.rank() - 2]);
  const long nx = static_cast<long>(g.dims[g.rank() - 1]);
  const auto l = mask.labels();
  auto is_cls = [&](long z, long y, long x) {
    if (z < 0 || z >= nz || y < 0 || y >= ny || x < 0 || x >= nx) return false;
    return l[static_cast<std::size_t>((z * ny + y) * nx + x)] == cls;
  };
  std::vector<std::size_t> out;
  for (long z = 0; z < nz; ++z) {
    for (long y = 0; y < ny; ++y) {
      for (long x = 0; x < nx; ++x) {
        if (!is_cls(z, y, x)) continue;
        const bool inner = is_cls(z, y, x - 1) && is_cls(z, y, x + 1) &&
                           is_cls(z, y - 1, x) && is_cls(z, y + 1, x) &&
                           (g.rank() == 2 || (is_cls(z - 1, y, x) && is_cls(z + 1, y, x)));
        if (!inner) out.push_back(static_cast<std::size_t>((z * ny + y) * nx + x));
      }
    }
  }
  return out;
}

std::vector<double> squared_distance_transform(const Grid& grid,
                                               std::span<const unsigned char> feature,
                                               Exec exec) {
  check_grid(grid);
  if (feature.size() != grid.voxel_count()) {
    throw InvalidArgument("feature map size does not match the grid");
  }
  std::vector<double> d2(feature.size());
  for (std::size_t i = 0; i < feature.size(); ++i) d2[i] = feature[i] ? 0.0 : kInf;
  for (std::size_t axis = grid.rank(); axis-- > 0;) {
    edt_pass(d2, grid.dims, axis, grid.spacing[axis], exec);
  }
  return d2;
}

std::optional<double> asd(const LabelMask& pred, const LabelMask& gt, Label cls,
                          AsdMode mode, Exec exec) {
  check_same_grid(pred, gt);
  if (mode == AsdMode::kVolume || pred.grid().rank() == 2) {
    return asd_on(pred, gt, cls, exec);
  }
  if (!has_label(pred, cls) || !has_label(gt, cls)) return std::nullopt;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t z = 0; z < pred.grid().dims[0]; ++z) {
    const auto s = asd_on(slice_of(pred, z), slice_of(gt, z), cls, exec);
    if (s) {
      sum += *s;
      ++used;
    }
  }
  if (used == 0) return std::nullopt;
  return sum / static_cast<double>(used);
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_statistic: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  auto has_nan = [](const std::vector<double>& v) {
    return std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
  };
  if (has_nan(sa) || has_nan(sb)) throw InvalidArgument("ks_statistic: NaN sample");
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double sup = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double x;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
      x = sa[i];
    } else {
      x = sb[j];
    }
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return sup;
}

AggregateReport aggregate(std::span<const MetricResult> results) {
  struct Acc {
    std::string name;
    std::vector<double> dice;
    std::vector<double> asd;
    std::size_t na = 0;
  };
  std::map<Label, Acc> by_label;
  for (const auto& r : results) {
    auto& acc = by_label[r.label];
    // Deterministic name choice regardless of order.
    if (acc.name.empty() || (!r.class_name.empty() && r.class_name < acc.name)) {
      acc.name = r.class_name;
    }
    acc.dice.push_back(r.dice);
    if (r.asd) {
      acc.asd.push_back(*r.asd);
    } else {
      ++acc.na;
    }
  }

  AggregateReport report;
  std::vector<double> dice_means, asd_means;
  for (auto& [label, acc] : by_label) {
    ClassAggregate c;
    c.label = label;
    c.class_name = acc.name;
    c.cases = acc.dice.size();
    std::tie(c.dice_mean, c.dice_std) = mean_std(acc.dice);
    c.asd_na_count = acc.na;
    if (!acc.asd.empty()) {
      const auto [m, s] = mean_std(acc.asd);
      c.asd_mean = m;
      c.asd_std = s;
      asd_means.push_back(m);
    }
    dice_means.push_back(c.dice_mean);
    report.classes.push_back(std::move(c));
  }
  if (!dice_means.empty()) {
    double sum = 0.0;
    for (double m : dice_means) sum += m;
    report.mean_dice = sum / static_cast<double>(dice_means.size());
  }
  if (!asd_means.empty()) {
    double sum = 0.0;
    for (double m : asd_means) sum += m;
    report.mean_asd = sum / static_cast<double>(asd_means.size());
  }
  return report;
}

std::vector<MetricResult> evaluate_case(const std::string& case_id,
                                        const LabelMask& pred, const LabelMask& gt,
                                        AsdMode mode, Exec exec) {
  check_same_grid(pred, gt);
  std::set<Label> labels;
  for (Label l : gt.present_labels()) labels.insert(l);
  for (Label l : pred.present_labels()) labels.insert(l);
  std::vector<MetricResult> out;
  for (Label l : labels) {
    MetricResult r;
    r.case_id = case_id;
    r.label = l;
    if (auto it = gt.class_names().find(l); it != gt.class_names().end()) {
      r.class_name = it->second;
    } else if (auto jt = pred.class_names().find(l); jt != pred.class_names().end()) {
      r.class_name = jt->second;
    } else {
      r.class_name = "label_" + std::to_string(l);
    }
    r.dice = dice(pred, gt, l);
    r.asd = asd(pred, gt, l, mode, exec);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sfa
