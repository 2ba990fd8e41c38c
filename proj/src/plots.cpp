#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "actdisc/error.hpp"
#include "actdisc/pipeline.hpp"

namespace actdisc {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
     << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << escape(title) << "</text>\n";
}

void axes(std::ostringstream& os, double y_lo, double y_hi, const std::string& x_label,
          const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y0)
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y1)
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y_lo + (y_hi - y_lo) * i / 4.0;
    const double y = y0 - (y0 - y1) * i / 4.0;
    os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(y + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << label_num(v) << "</text>\n";
  }
  os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 12)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label) << "</text>\n"
     << "<text x=\"16\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"12\" transform=\"rotate(-90 16 " << num((y0 + y1) / 2) << ")\">" << escape(y_label)
     << "</text>\n";
}

std::string method_label(const ExperimentReport& r) {
  return r.name.empty() ? r.algorithm : r.name + " (" + r.algorithm + ")";
}

}  // namespace

std::string convergence_svg(const std::vector<ExperimentReport>& reports) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t max_len = 0;
  for (const auto& r : reports) {
    for (const auto& run : r.runs) {
      for (double v : run.convergence) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      max_len = std::max(max_len, run.convergence.size());
    }
  }
  if (max_len == 0) return {};
  if (hi <= lo) hi = lo + 1.0;

  std::ostringstream os;
  open_svg(os, "Convergence of the global best");
  axes(os, lo, hi, "iteration", "gbest SSE");
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double dx = max_len > 1 ? (x1 - x0) / static_cast<double>(max_len - 1) : 0.0;
  for (std::size_t ri = 0; ri < reports.size(); ++ri) {
    const char* colour = kPalette[ri % std::size(kPalette)];
    for (const auto& run : reports[ri].runs) {
      if (run.convergence.empty()) continue;
      os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-opacity=\"0.6\" points=\"";
      for (std::size_t i = 0; i < run.convergence.size(); ++i) {
        const double x = x0 + dx * static_cast<double>(i);
        const double y = y0 - (y0 - y1) * (run.convergence[i] - lo) / (hi - lo);
        os << (i ? " " : "") << num(x) << ',' << num(y);
      }
      os << "\"/>\n";
    }
    os << "<text x=\"" << num(x1 - 4) << "\" y=\"" << num(y1 + 14 * (ri + 1))
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << colour << "\">"
       << escape(method_label(reports[ri])) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string accuracy_svg(const std::vector<ExperimentReport>& reports) {
  std::ostringstream os;
  open_svg(os, "Accuracy over runs (min / mean / max)");
  axes(os, 0.0, 1.0, "method", "accuracy");
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double slot = (x1 - x0) / static_cast<double>(std::max<std::size_t>(reports.size(), 1));
  const double bar = slot / 4.0;
  constexpr const char* kBars[] = {"#9ecae1", "#3182bd", "#08519c"};
  for (std::size_t ri = 0; ri < reports.size(); ++ri) {
    const auto& agg = reports[ri].aggregate;
    const double values[] = {agg.accuracy_min, agg.accuracy_mean, agg.accuracy_max};
    const double left = x0 + slot * static_cast<double>(ri) + bar / 2.0;
    for (int b = 0; b < 3; ++b) {
      const double h = (y0 - y1) * std::clamp(values[b], 0.0, 1.0);
      os << "<rect x=\"" << num(left + bar * b) << "\" y=\"" << num(y0 - h) << "\" width=\"" << num(bar)
         << "\" height=\"" << num(h) << "\" fill=\"" << kBars[b] << "\"/>\n";
    }
    os << "<text x=\"" << num(left + 1.5 * bar) << "\" y=\"" << num(y0 + 16)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << escape(method_label(reports[ri])) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_plots(const std::vector<ExperimentReport>& reports,
                                              const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const auto write = [](const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << body;
    if (!out) throw Error("failed writing " + p.string());
  };
  std::vector<std::filesystem::path> written;
  const auto conv = convergence_svg(reports);
  const auto conv_path = out_dir / "convergence.svg";
  if (!conv.empty()) {
    write(conv_path, conv);
    written.push_back(conv_path);
  } else {
    std::filesystem::remove(conv_path, ec);
  }
  const auto acc_path = out_dir / "accuracy.svg";
  write(acc_path, accuracy_svg(reports));
  written.push_back(acc_path);
  return written;
}

}  // namespace actdisc
