#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>

#include "resq/report.hpp"

namespace resq::report {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fx(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

struct Frame {
  double width = 760, height = 480;
  double left = 80, right = 170, top = 40, bottom = 60;
  double x0, x1, y0, y1;  // data range (already transformed)

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void header(std::ostringstream& os, const Frame& f, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fx(f.width) << "\" height=\""
     << fx(f.height) << "\" viewBox=\"0 0 " << fx(f.width) << ' ' << fx(f.height)
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fx(f.width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title) << "</text>\n";
  os << "<rect x=\"" << fx(f.left) << "\" y=\"" << fx(f.top) << "\" width=\""
     << fx(f.width - f.left - f.right) << "\" height=\"" << fx(f.height - f.top - f.bottom)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
}

void legend(std::ostringstream& os, const Frame& f, const std::vector<pipeline::SampleStats>& stats) {
  double y = f.top + 10;
  for (std::size_t i = 0; i < stats.size(); ++i, y += 18) {
    const double x = f.width - f.right + 15;
    os << "<rect x=\"" << fx(x) << "\" y=\"" << fx(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
       << color(i) << "\"/>\n";
    os << "<text x=\"" << fx(x + 16) << "\" y=\"" << fx(y) << "\">" << escape(stats[i].sample_id)
       << "</text>\n";
  }
}

}  // namespace

std::string svg_qi_vs_n(const std::vector<pipeline::SampleStats>& stats) {
  double nmin = std::numeric_limits<double>::infinity(), nmax = 0.0;
  double qmin = std::numeric_limits<double>::infinity(), qmax = 0.0;
  for (const auto& s : stats) {
    for (const auto& r : s.resonators) {
      for (const auto& p : r.points) {
        if (!(p.n_mean > 0.0) || !(p.qi > 0.0)) continue;
        nmin = std::min(nmin, p.n_mean);
        nmax = std::max(nmax, p.n_mean);
        qmin = std::min(qmin, p.qi);
        qmax = std::max(qmax, p.qi);
      }
    }
  }
  if (!(nmax > 0.0)) {
    nmin = 0.1;
    nmax = 10.0;
    qmin = 1e5;
    qmax = 1e6;
  }
  Frame f;
  f.x0 = std::floor(std::log10(nmin));
  f.x1 = std::max(std::ceil(std::log10(nmax)), f.x0 + 1);
  f.y0 = std::floor(std::log10(qmin) * 4) / 4;
  f.y1 = std::max(std::ceil(std::log10(qmax) * 4) / 4, f.y0 + 0.25);

  std::ostringstream os;
  header(os, f, "Internal quality factor vs. mean photon number");
  for (int k = static_cast<int>(f.x0); k <= static_cast<int>(f.x1); ++k) {
    const double x = f.px(k);
    os << "<line x1=\"" << fx(x) << "\" y1=\"" << fx(f.py(f.y0)) << "\" x2=\"" << fx(x)
       << "\" y2=\"" << fx(f.py(f.y1)) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << fx(x) << "\" y=\"" << fx(f.height - f.bottom + 18)
       << "\" text-anchor=\"middle\">1e" << k << "</text>\n";
  }
  for (double y = f.y0; y <= f.y1 + 1e-9; y += 0.25) {
    os << "<text x=\"" << fx(f.left - 6) << "\" y=\"" << fx(f.py(y) + 4)
       << "\" text-anchor=\"end\">" << fx(std::pow(10.0, y) / 1e6) << "e6</text>\n";
  }
  os << "<text x=\"" << fx((f.left + f.width - f.right) / 2) << "\" y=\"" << fx(f.height - 15)
     << "\" text-anchor=\"middle\">mean photon number &lt;n&gt;</text>\n";
  os << "<text x=\"18\" y=\"" << fx((f.top + f.height - f.bottom) / 2)
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << fx((f.top + f.height - f.bottom) / 2)
     << ")\">Qi</text>\n";

  for (std::size_t i = 0; i < stats.size(); ++i) {
    for (const auto& r : stats[i].resonators) {
      os << "<g class=\"resonator\" data-sample=\"" << escape(stats[i].sample_id)
         << "\" data-resonator=\"" << escape(r.resonator_id) << "\">\n";
      for (const auto& p : r.points) {
        if (!(p.n_mean > 0.0) || !(p.qi > 0.0)) continue;
        const double x = f.px(std::log10(p.n_mean));
        const double lo = std::max(p.qi - p.qi_sigma, std::pow(10.0, f.y0));
        os << "<line x1=\"" << fx(x) << "\" y1=\"" << fx(f.py(std::log10(lo))) << "\" x2=\"" << fx(x)
           << "\" y2=\"" << fx(f.py(std::min(std::log10(p.qi + p.qi_sigma), f.y1)))
           << "\" stroke=\"" << color(i) << "\"/>\n";
        os << "<circle cx=\"" << fx(x) << "\" cy=\"" << fx(f.py(std::log10(p.qi)))
           << "\" r=\"3\" fill=\"" << color(i) << "\"/>\n";
      }
      if (r.ok && r.fit) {
        os << "<polyline class=\"model\" fill=\"none\" stroke=\"" << color(i)
           << "\" stroke-width=\"1.5\" points=\"";
        constexpr int kSteps = 120;
        for (int k = 0; k <= kSteps; ++k) {
          const double lx = f.x0 + (f.x1 - f.x0) * k / kSteps;
          const double q = std::clamp(std::log10(tls::qi_at(std::pow(10.0, lx), *r.fit)), f.y0, f.y1);
          os << (k ? " " : "") << fx(f.px(lx)) << ',' << fx(f.py(q));
        }
        os << "\"/>\n";
      }
      os << "</g>\n";
    }
  }
  legend(os, f, stats);
  os << "</svg>\n";
  return os.str();
}

std::string svg_f_delta_box(const std::vector<pipeline::SampleStats>& stats) {
  double vmax = 0.0;
  for (const auto& s : stats)
    for (const auto& r : s.resonators)
      if (r.ok && r.fit) vmax = std::max(vmax, r.fit->params.f_delta_tls0);
  if (!(vmax > 0.0)) vmax = 1e-6;
  Frame f;
  f.x0 = 0.0;
  f.x1 = static_cast<double>(std::max<std::size_t>(stats.size(), 1));
  f.y0 = 0.0;
  f.y1 = vmax * 1.15 * 1e6;  // plotted in units of 1e-6

  std::ostringstream os;
  header(os, f, "TLS loss F*delta0 per sample");
  for (int k = 0; k <= 5; ++k) {
    const double y = f.y1 * k / 5.0;
    os << "<line x1=\"" << fx(f.left) << "\" y1=\"" << fx(f.py(y)) << "\" x2=\""
       << fx(f.width - f.right) << "\" y2=\"" << fx(f.py(y)) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << fx(f.left - 6) << "\" y=\"" << fx(f.py(y) + 4) << "\" text-anchor=\"end\">"
       << fx(y) << "</text>\n";
  }
  os << "<text x=\"18\" y=\"" << fx((f.top + f.height - f.bottom) / 2)
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << fx((f.top + f.height - f.bottom) / 2)
     << ")\">F*delta0 (1e-6)</text>\n";

  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    const double cx = f.px(static_cast<double>(i) + 0.5);
    const double half = 0.25 * (f.px(1.0) - f.px(0.0));
    os << "<text x=\"" << fx(cx) << "\" y=\"" << fx(f.height - f.bottom + 18)
       << "\" text-anchor=\"middle\">" << escape(s.sample_id) << "</text>\n";
    if (!s.summary) continue;
    const auto& b = s.summary->f_delta_tls0;
    auto y = [&](double v) { return fx(f.py(v * 1e6)); };
    os << "<g class=\"box\" data-sample=\"" << escape(s.sample_id) << "\">\n";
    os << "<line x1=\"" << fx(cx) << "\" y1=\"" << y(b.min) << "\" x2=\"" << fx(cx) << "\" y2=\""
       << y(b.q1) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << fx(cx) << "\" y1=\"" << y(b.q3) << "\" x2=\"" << fx(cx) << "\" y2=\""
       << y(b.max) << "\" stroke=\"black\"/>\n";
    for (double v : {b.min, b.max}) {
      os << "<line x1=\"" << fx(cx - half / 2) << "\" y1=\"" << y(v) << "\" x2=\""
         << fx(cx + half / 2) << "\" y2=\"" << y(v) << "\" stroke=\"black\"/>\n";
    }
    os << "<rect x=\"" << fx(cx - half) << "\" y=\"" << y(b.q3) << "\" width=\"" << fx(2 * half)
       << "\" height=\"" << fx(f.py(b.q1 * 1e6) - f.py(b.q3 * 1e6)) << "\" fill=\"" << color(i)
       << "\" fill-opacity=\"0.3\" stroke=\"black\"/>\n";
    os << "<line class=\"median\" x1=\"" << fx(cx - half) << "\" y1=\"" << y(b.median) << "\" x2=\""
       << fx(cx + half) << "\" y2=\"" << y(b.median) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    std::size_t k = 0;
    for (const auto& r : s.resonators) {
      if (!r.ok || !r.fit) continue;
      // Deterministic horizontal spread of the individual resonators.
      const double dx = half * 0.8 * (static_cast<double>(k % 5) - 2.0) / 2.0;
      os << "<circle cx=\"" << fx(cx + dx) << "\" cy=\"" << y(r.fit->params.f_delta_tls0)
         << "\" r=\"3\" fill=\"" << color(i) << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
      ++k;
    }
    os << "</g>\n";
  }
  legend(os, f, stats);
  os << "</svg>\n";
  return os.str();
}

}  // namespace resq::report
