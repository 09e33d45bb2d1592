#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sfadapt/metrics.hpp"

namespace sfa {

// Shortest decimal that reads back to the same double.
std::string format_number(double x);

// One row per (case, class), then one aggregate row per class, then the
// grand means. Columns:
//   scope,case,class,label,dice,dice_std,asd,asd_std,asd_na_count,asd_mode
// Undefined ASD is written as "N/A".
std::string evaluation_csv(const std::vector<MetricResult>& per_case,
                           const AggregateReport& agg, AsdMode mode);

// Two-row table (DICE in percent, ASD in mm) with one column per class and
// a final mean column; cells are "mean±std" with two decimals or "N/A".
std::string evaluation_markdown(const AggregateReport& agg, AsdMode mode);

}  // namespace sfa
