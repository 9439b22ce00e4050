#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace blv::cli {

namespace {

Json optional_list(const std::vector<std::optional<double>>& values) {
  Json out = Json::array();
  for (const auto& v : values) out.push_back(v ? Json(*v) : Json(nullptr));
  return out;
}

Json optional_value(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json metrics_to_json(const MetricsReport& m) {
  Json j;
  j["per_class_iou"] = optional_list(m.per_class_iou);
  j["per_class_recall"] = optional_list(m.per_class_recall);
  std::vector<std::size_t> absent;
  for (std::size_t k = 0; k < m.per_class_iou.size(); ++k) {
    if (!m.per_class_iou[k]) absent.push_back(k);
  }
  j["absent_classes"] = absent;
  j["miou"] = m.miou;
  j["tail_miou"] = optional_value(m.tail_miou);
  j["tail_classes"] = m.tail_classes;
  return j;
}

Json run_report(const std::string& command, const Json& config_echo, const TrainResult& result,
                double wall_clock_seconds, bool debug) {
  Json r;
  r["schema"] = kSchemaVersion;
  r["command"] = command;
  r["mode"] = config_echo.at("train").at("mode");
  r["frequency_source"] = config_echo.at("train").at("frequency_source");
  r["seed"] = result.seed;
  r["config"] = config_echo;
  Json history = Json::array();
  for (const auto& f : result.frequency_history) history.push_back(f.freqs);
  r["frequency_history"] = history;
  if (!result.frequency_history.empty()) {
    const auto& last = result.frequency_history.back();
    bool positive = std::all_of(last.freqs.begin(), last.freqs.end(), [](double q) { return q > 0; });
    r["coefficients"] = positive ? Json(balancing_coefficients(last).coeffs) : Json(nullptr);
  }
  r["loss_curve"] = result.loss_curve;
  r["miou_curve"] = result.miou_curve;
  r["tail_miou_curve"] = optional_list(result.tail_miou_curve);
  r["metrics"] = metrics_to_json(result.metrics);
  r["iterations"] = result.iterations;
  r["wall_clock_seconds"] = wall_clock_seconds;
  if (debug && result.last_perturbed_logits) {
    const Matrix& m = *result.last_perturbed_logits;
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    r["perturbed_logits"] = rows;
  }
  return r;
}

Json frequency_report(const std::vector<std::string>& files, std::size_t num_classes,
                      int ignore_index, double smoothing, const ClassHistogram& hist) {
  const FrequencyVector freqs = normalize(hist, smoothing);
  Json j;
  j["schema"] = kSchemaVersion;
  j["command"] = "freq";
  j["files"] = files;
  j["num_classes"] = num_classes;
  j["ignore_index"] = ignore_index;
  j["smoothing"] = smoothing;
  j["counts"] = hist.counts;
  j["ignored"] = hist.ignored;
  j["frequencies"] = freqs.freqs;
  if (std::all_of(freqs.freqs.begin(), freqs.freqs.end(), [](double q) { return q > 0; })) {
    const BalancingCoefficients c = balancing_coefficients(freqs);
    j["coefficients"] = c.coeffs;
    j["raw_coefficients"] = c.raw;
  } else {
    // Unsmoothed zero-count classes have no finite coefficient.
    j["coefficients"] = nullptr;
    j["raw_coefficients"] = nullptr;
  }
  j["tail_ranking"] = tail_ranking(freqs);
  return j;
}

namespace {

class Checker {
 public:
  explicit Checker(const Json& doc) : doc_(doc) {}

  template <typename Pred>
  void field(const std::string& key, Pred&& pred, const char* expected) {
    auto it = doc_.find(key);
    if (it == doc_.end()) {
      errors_.push_back("missing field '" + key + "'");
    } else if (!pred(*it)) {
      errors_.push_back("field '" + key + "' should be " + expected);
    }
  }

  std::vector<std::string> take() { return std::move(errors_); }

 private:
  const Json& doc_;
  std::vector<std::string> errors_;
};

bool is_number_array(const Json& j) {
  return j.is_array() && std::all_of(j.begin(), j.end(), [](const Json& v) { return v.is_number(); });
}

bool is_nullable_number_array(const Json& j) {
  return j.is_array() &&
         std::all_of(j.begin(), j.end(), [](const Json& v) { return v.is_number() || v.is_null(); });
}

bool is_metrics(const Json& j) {
  if (!j.is_object()) return false;
  for (const char* k : {"per_class_iou", "per_class_recall"}) {
    if (!j.contains(k) || !is_nullable_number_array(j.at(k))) return false;
  }
  if (!j.contains("miou") || !j.at("miou").is_number()) return false;
  if (!j.contains("tail_miou") || !(j.at("tail_miou").is_number() || j.at("tail_miou").is_null())) {
    return false;
  }
  for (const auto& v : j.at("per_class_iou")) {
    if (v.is_number() && (v.get<double>() < 0.0 || v.get<double>() > 1.0)) return false;
  }
  return j.contains("tail_classes") && j.at("tail_classes").is_array();
}

}  // namespace

std::vector<std::string> validate_run_report(const Json& report) {
  if (!report.is_object()) return {"report is not an object"};
  Checker c(report);
  c.field("schema", [](const Json& v) { return v == kSchemaVersion; }, "1");
  c.field("command", [](const Json& v) { return v.is_string(); }, "a string");
  c.field("mode", [](const Json& v) { return v.is_string(); }, "a string");
  c.field("frequency_source", [](const Json& v) { return v.is_string(); }, "a string");
  c.field("seed", [](const Json& v) { return v.is_number_unsigned() || v.is_number_integer(); },
          "an integer");
  c.field("config", [](const Json& v) { return v.is_object(); }, "an object");
  c.field("frequency_history",
          [](const Json& v) {
            return v.is_array() && std::all_of(v.begin(), v.end(), is_number_array);
          },
          "an array of number arrays");
  c.field("loss_curve", is_number_array, "a number array");
  c.field("miou_curve", is_number_array, "a number array");
  c.field("tail_miou_curve", is_nullable_number_array, "an array of numbers or nulls");
  c.field("metrics", is_metrics, "a metrics object");
  c.field("wall_clock_seconds", [](const Json& v) { return v.is_number(); }, "a number");
  auto errors = c.take();
  if (errors.empty()) {
    const auto epochs = report["loss_curve"].size();
    if (report["frequency_history"].size() != epochs) {
      errors.push_back("frequency_history length differs from loss_curve");
    }
    if (report["tail_miou_curve"].size() != epochs || report["miou_curve"].size() != epochs) {
      errors.push_back("metric curves differ in length from loss_curve");
    }
  }
  return errors;
}

std::vector<std::string> validate_ablation_summary(const Json& summary) {
  if (!summary.is_object()) return {"summary is not an object"};
  Checker c(summary);
  c.field("schema", [](const Json& v) { return v == kSchemaVersion; }, "1");
  c.field("command", [](const Json& v) { return v == "ablate"; }, "\"ablate\"");
  c.field("axis", [](const Json& v) { return v.is_string(); }, "a string");
  c.field("seeds", [](const Json& v) { return v.is_array() && !v.empty(); }, "a nonempty array");
  c.field("complete", [](const Json& v) { return v.is_boolean(); }, "a boolean");
  c.field("rows",
          [](const Json& rows) {
            if (!rows.is_array()) return false;
            return std::all_of(rows.begin(), rows.end(), [](const Json& r) {
              return r.is_object() && r.contains("value") && r.contains("runs") &&
                     r.at("runs").is_number_unsigned() && r.contains("median_tail_miou") &&
                     (r.at("median_tail_miou").is_number() || r.at("median_tail_miou").is_null()) &&
                     r.contains("median_miou") && r.at("median_miou").is_number() &&
                     r.contains("tail_miou") && is_nullable_number_array(r.at("tail_miou")) &&
                     r.contains("miou") && is_number_array(r.at("miou"));
            });
          },
          "an array of summary rows");
  return c.take();
}

std::string config_hash(const Json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<PlotSeries>& series) {
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
  constexpr double kPlotW = kWidth - kLeft - kRight, kPlotH = kHeight - kTop - kBottom;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double x_span = n > 1 ? static_cast<double>(n - 1) : 1.0;
  auto px = [&](std::size_t i) { return kLeft + kPlotW * static_cast<double>(i) / x_span; };
  auto py = [&](double v) { return kTop + kPlotH * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape_xml(title) << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << kLeft + kPlotW
      << "\" y2=\"" << kTop + kPlotH << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + kPlotH << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    const double y = py(v);
    svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(v)
        << "</text>\n";
    const auto xi = static_cast<std::size_t>(std::llround(x_span * i / 4.0));
    svg << "<text x=\"" << px(xi) << "\" y=\"" << kTop + kPlotH + 16
        << "\" text-anchor=\"middle\">" << xi + 1 << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << kTop + kPlotH / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].values.size(); ++i) {
      const double v = series[s].values[i];
      if (std::isfinite(v)) svg << px(i) << "," << py(v) << " ";
    }
    svg << "\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(s) + 8;
    svg << "<line x1=\"" << kLeft + kPlotW - 120 << "\" y1=\"" << ly << "\" x2=\""
        << kLeft + kPlotW - 100 << "\" y2=\"" << ly << "\" stroke=\"" << color << "\"/>\n";
    svg << "<text x=\"" << kLeft + kPlotW - 95 << "\" y=\"" << ly + 4 << "\">"
        << escape_xml(series[s].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace blv::cli
