#ifndef CTDVS_SVG_PLOT_HPP
#define CTDVS_SVG_PLOT_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ctdvs/trace_csv.hpp"

namespace ctdvs {

/// One poly-line series for the SVG plotters.
struct PlotSeries {
    std::string label;
    std::string color = "#1f6fb4";
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line chart. Data-only views of the trace CSVs; no interactivity.
inline std::string render_line_chart(const std::string& title, const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<PlotSeries>& series)
{
    const double width = 820, height = 460;
    const double ml = 70, mr = 160, mt = 44, mb = 52;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) {
        xmin = 0;
        xmax = 1;
    }
    if (!(ymax > ymin)) {
        ymax = ymin + 1;
    }
    ymin = std::min(ymin, 0.0);
    const double yspan = ymax - ymin;
    ymax += 0.05 * yspan;

    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto sy = [&](double y) {
        return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
    };

    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "' viewBox='0 0 " << width << " " << height << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16' "
        << "font-family='sans-serif'>" << title << "</text>\n";

    // gridlines and ticks
    for (int i = 0; i <= 6; ++i) {
        const double gx = xmin + (xmax - xmin) * i / 6.0;
        const double gy = ymin + (ymax - ymin) * i / 6.0;
        out << "<line x1='" << sx(gx) << "' y1='" << sy(ymin) << "' x2='" << sx(gx) << "' y2='"
            << sy(ymax) << "' stroke='#e0e0e0'/>\n";
        out << "<line x1='" << sx(xmin) << "' y1='" << sy(gy) << "' x2='" << sx(xmax)
            << "' y2='" << sy(gy) << "' stroke='#e0e0e0'/>\n";
        out << "<text x='" << sx(gx) << "' y='" << height - mb + 18
            << "' text-anchor='middle' font-size='11' font-family='sans-serif'>"
            << format_number(std::round(gx * 1000) / 1000) << "</text>\n";
        out << "<text x='" << ml - 8 << "' y='" << sy(gy) + 4
            << "' text-anchor='end' font-size='11' font-family='sans-serif'>"
            << format_number(std::round(gy * 1000) / 1000) << "</text>\n";
    }
    out << "<text x='" << width / 2 << "' y='" << height - 12
        << "' text-anchor='middle' font-size='13' font-family='sans-serif'>" << x_label
        << "</text>\n";
    out << "<text x='18' y='" << height / 2
        << "' text-anchor='middle' font-size='13' font-family='sans-serif' "
        << "transform='rotate(-90 18 " << height / 2 << ")'>" << y_label << "</text>\n";

    int legend_row = 0;
    for (const auto& s : series) {
        out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.6' points='";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
        out << "'/>\n";
        const double ly = mt + 16 * legend_row++;
        out << "<line x1='" << width - mr + 12 << "' y1='" << ly << "' x2='" << width - mr + 34
            << "' y2='" << ly << "' stroke='" << s.color << "' stroke-width='2'/>\n";
        out << "<text x='" << width - mr + 40 << "' y='" << ly + 4
            << "' font-size='12' font-family='sans-serif'>" << s.label << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

/// Standard per-trace views, generated from the already-written CSV so the
/// plots cannot disagree with it: normalized energy, requested utilization,
/// and summed control cost against time.
inline void write_trace_plots(const std::filesystem::path& csv_path,
                              const std::filesystem::path& out_dir,
                              const std::string& stem)
{
    const CsvTable table = read_csv_table(csv_path);
    const int t_col = table.column_index("t_s");
    if (t_col < 0)
        throw IoError("trace CSV is missing the time column: " + csv_path.string());
    auto column = [&](int idx) {
        std::vector<double> v;
        for (const auto& row : table.rows)
            v.push_back(row[static_cast<std::size_t>(idx)]);
        return v;
    };
    const std::vector<double> t = column(t_col);

    auto one = [&](const char* col, const char* title, const char* y_label,
                   const char* suffix) {
        const int c = table.column_index(col);
        if (c < 0)
            return;
        PlotSeries s{col, "#1f6fb4", t, column(c)};
        write_file_atomic(out_dir / (stem + suffix),
                          render_line_chart(title, "time [s]", y_label, {s}));
    };
    one("energy_instant", "Normalized CPU energy consumption", "E(alpha)", "_energy.svg");
    one("requested_util", "Requested CPU utilization", "requested utilization",
        "_requested_util.svg");

    PlotSeries cost{"total cost", "#b43a1f", t, {}};
    cost.y.assign(t.size(), 0.0);
    bool have_cost = false;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (table.columns[c].rfind("cost_loop", 0) == 0) {
            have_cost = true;
            for (std::size_t r = 0; r < table.rows.size(); ++r)
                cost.y[r] += table.rows[r][c];
        }
    }
    if (have_cost)
        write_file_atomic(out_dir / (stem + "_total_cost.svg"),
                          render_line_chart("Total control cost", "time [s]", "sum J_i",
                                            {cost}));
}

} // namespace ctdvs

#endif
