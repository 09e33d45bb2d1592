#include "sfadapt/report.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace sfa {

namespace {

std::string fixed2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string opt_number(const std::optional<double>& x) {
  return x ? format_number(*x) : "N/A";
}

// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string evaluation_csv(const std::vector<MetricResult>& per_case,
                           const AggregateReport& agg, AsdMode mode) {
  const std::string m = asd_mode_name(mode);
  std::ostringstream out;
  out << "scope,case,class,label,dice,dice_std,asd,asd_std,asd_na_count,asd_mode\n";
  for (const auto& r : per_case) {
    out << "case," << csv_field(r.case_id) << ',' << csv_field(r.class_name) << ','
        << r.label << ',' << format_number(r.dice) << ",," << opt_number(r.asd)
        << ",," << (r.asd ? 0 : 1) << ',' << m << '\n';
  }
  for (const auto& c : agg.classes) {
    out << "class,," << csv_field(c.class_name) << ',' << c.label << ','
        << format_number(c.dice_mean) << ',' << format_number(c.dice_std) << ','
        << opt_number(c.asd_mean) << ',' << opt_number(c.asd_std) << ','
        << c.asd_na_count << ',' << m << '\n';
  }
  out << "mean,,,," << format_number(agg.mean_dice) << ",," << opt_number(agg.mean_asd)
      << ",,," << m << '\n';
  return out.str();
}

std::string evaluation_markdown(const AggregateReport& agg, AsdMode mode) {
  std::ostringstream out;
  out << "| Metric |";
  for (const auto& c : agg.classes) out << ' ' << md_cell(c.class_name) << " |";
  out << " Mean |\n|---|";
  for (std::size_t i = 0; i < agg.classes.size(); ++i) out << "---|";
  out << "---|\n";

  out << "| DICE (%, mean±std) |";
  for (const auto& c : agg.classes) {
    out << ' ' << fixed2(100.0 * c.dice_mean) << "±" << fixed2(100.0 * c.dice_std) << " |";
  }
  out << ' ' << fixed2(100.0 * agg.mean_dice) << " |\n";

  out << "| ASD (mm, mean±std) |";
  for (const auto& c : agg.classes) {
    if (c.asd_mean) {
      out << ' ' << fixed2(*c.asd_mean) << "±" << fixed2(*c.asd_std) << " |";
    } else {
      out << " N/A |";
    }
  }
  out << ' ' << (agg.mean_asd ? fixed2(*agg.mean_asd) : std::string("N/A")) << " |\n";

  out << "\nASD mode: " << asd_mode_name(mode) << ".";
  bool any_na = false;
  for (const auto& c : agg.classes) {
    if (c.asd_na_count == 0) continue;
    out << (any_na ? "," : " N/A cases skipped in ASD:") << ' ' << md_cell(c.class_name)
        << " (" << c.asd_na_count << ")";
    any_na = true;
  }
  out << '\n';
  return out.str();
}

}  // namespace sfa
