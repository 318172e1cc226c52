#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "solarnet/curves.hpp"

namespace solarnet {

// Static plot emission for the CLI: curves on a unit square, simple bar
// charts for the efficiency summary. Everything renders deterministically.

struct PlotSeries {
    std::string label;
    std::vector<CurvePoint> points;  // x,y in [0,1]
};

inline cv::Scalar plot_color(std::size_t i) {
    static const std::vector<cv::Scalar> palette = {
        {180, 70, 30},  {40, 120, 220}, {60, 160, 60},  {170, 40, 160},
        {30, 180, 200}, {120, 120, 40}, {90, 90, 90},   {20, 60, 140},
    };
    return palette[i % palette.size()];
}

inline void write_curves_plot(const std::filesystem::path& path, const std::string& title,
                              const std::string& x_label, const std::string& y_label,
                              const std::vector<PlotSeries>& series) {
    const int size = 640, margin = 60;
    cv::Mat canvas(size, size, CV_8UC3, cv::Scalar(255, 255, 255));
    const int lo = margin, hi = size - margin;
    cv::rectangle(canvas, {lo, lo}, {hi, hi}, cv::Scalar(120, 120, 120), 1);
    auto px = [&](double x) { return lo + static_cast<int>(x * (hi - lo) + 0.5); };
    auto py = [&](double y) { return hi - static_cast<int>(y * (hi - lo) + 0.5); };
    for (int g = 1; g < 4; ++g) {
        const int t = lo + g * (hi - lo) / 4;
        cv::line(canvas, {t, lo}, {t, hi}, cv::Scalar(230, 230, 230), 1);
        cv::line(canvas, {lo, t}, {hi, t}, cv::Scalar(230, 230, 230), 1);
    }
    cv::putText(canvas, title, {lo, margin / 2}, cv::FONT_HERSHEY_SIMPLEX, 0.6,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    cv::putText(canvas, x_label, {size / 2 - 30, size - 15}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    cv::putText(canvas, y_label, {8, size / 2}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto color = plot_color(s);
        const auto& pts = series[s].points;
        for (std::size_t i = 1; i < pts.size(); ++i)
            cv::line(canvas, {px(pts[i - 1].x), py(pts[i - 1].y)}, {px(pts[i].x), py(pts[i].y)},
                     color, 2, cv::LINE_AA);
        cv::putText(canvas, series[s].label,
                    {hi - 150, lo + 18 + static_cast<int>(s) * 18}, cv::FONT_HERSHEY_SIMPLEX,
                    0.45, color, 1, cv::LINE_AA);
    }
    cv::imwrite(path.string(), canvas);
}

struct BarDatum {
    std::string label;
    double value = 0.0;
};

inline void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                            const std::vector<BarDatum>& data) {
    const int w = 720, h = 460, margin = 70;
    cv::Mat canvas(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
    double vmax = 1e-9;
    for (const auto& d : data) vmax = std::max(vmax, d.value);
    const int n = static_cast<int>(data.size());
    const int plot_w = w - 2 * margin, plot_h = h - 2 * margin;
    const int bar_w = std::max(8, plot_w / std::max(1, 2 * n));
    cv::putText(canvas, title, {margin, margin / 2}, cv::FONT_HERSHEY_SIMPLEX, 0.6,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    cv::line(canvas, {margin, h - margin}, {w - margin, h - margin}, cv::Scalar(60, 60, 60), 1);
    for (int i = 0; i < n; ++i) {
        const int cx = margin + (2 * i + 1) * plot_w / (2 * n);
        const int bh = static_cast<int>(data[static_cast<std::size_t>(i)].value / vmax * plot_h);
        cv::rectangle(canvas, {cx - bar_w / 2, h - margin - bh}, {cx + bar_w / 2, h - margin},
                      plot_color(static_cast<std::size_t>(i)), cv::FILLED);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", data[static_cast<std::size_t>(i)].value);
        cv::putText(canvas, buf, {cx - 20, h - margin - bh - 6}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                    cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
        cv::putText(canvas, data[static_cast<std::size_t>(i)].label, {cx - 30, h - margin + 20},
                    cv::FONT_HERSHEY_SIMPLEX, 0.42, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    }
    cv::imwrite(path.string(), canvas);
}

}  // namespace solarnet
