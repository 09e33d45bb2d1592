#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfadapt/grid.hpp"
#include "sfadapt/parallel.hpp"

namespace sfa {

// 2|A∩B| / (|A|+|B|) over the voxels labelled `cls`. Both empty gives 1,
// exactly one empty gives 0. Throws InvalidArgument on a grid mismatch.
double dice(const LabelMask& pred, const LabelMask& gt, Label cls);

// kVolume measures whole grids; kSlice averages 2-D ASD over the z slices in
// which both masks contain the class (identical to kVolume for 2-D grids).
enum class AsdMode { kVolume, kSlice };

const char* asd_mode_name(AsdMode m);

// Voxels of `cls` with at least one face neighbour that is not `cls`;
// neighbours outside the grid count as background. Ascending indices.
std::vector<std::size_t> surface_voxels(const LabelMask& mask, Label cls);

// Squared physical distance from every voxel to the nearest voxel with
// feature[v] != 0 (+inf when there is none). Exact lower-envelope transform,
// separable over axes; Exec::kSerial runs the same passes on one thread.
std::vector<double> squared_distance_transform(const Grid& grid,
                                               std::span<const unsigned char> feature,
                                               Exec exec = Exec::kParallel);

// Average symmetric surface distance in millimetres:
// (mean over pred surface of the distance to the gt surface +
//  mean over gt surface of the distance to the pred surface) / 2.
// nullopt (reported as N/A) when either mask lacks the class.
std::optional<double> asd(const LabelMask& pred, const LabelMask& gt, Label cls,
                          AsdMode mode = AsdMode::kVolume,
                          Exec exec = Exec::kParallel);

// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b| over the merged
// sample points, right-continuous empirical CDFs. Throws InvalidArgument on
// an empty sample or NaN.
double ks_statistic(std::span<const double> a, std::span<const double> b);

struct MetricResult {
  std::string case_id;
  Label label = 0;
  std::string class_name;
  double dice = 0.0;
  std::optional<double> asd;  // nullopt = N/A
};

struct ClassAggregate {
  Label label = 0;
  std::string class_name;
  std::size_t cases = 0;
  double dice_mean = 0.0;
  double dice_std = 0.0;  // population
  std::optional<double> asd_mean;
  std::optional<double> asd_std;
  std::size_t asd_na_count = 0;
};

struct AggregateReport {
  std::vector<ClassAggregate> classes;  // ascending label
  double mean_dice = 0.0;               // mean of class means
  std::optional<double> mean_asd;       // over classes with a defined ASD mean
};

// Per-class mean and population std; N/A ASD values are skipped and counted.
// The result does not depend on the order of `results`.
AggregateReport aggregate(std::span<const MetricResult> results);

// Every class present in either mask, each with its DICE and ASD.
std::vector<MetricResult> evaluate_case(const std::string& case_id,
                                        const LabelMask& pred, const LabelMask& gt,
                                        AsdMode mode = AsdMode::kVolume,
                                        Exec exec = Exec::kParallel);

}  // namespace sfa
