#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "solarnet/image.hpp"

namespace solarnet {

inline bool has_image_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

// Cheap signature probe used at manifest time; full decode stays lazy.
inline bool has_valid_image_signature(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return false;
    std::array<unsigned char, 8> head{};
    f.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
    if (f.gcount() < 3) return false;
    static constexpr std::array<unsigned char, 4> png = {0x89, 'P', 'N', 'G'};
    if (f.gcount() >= 4 && std::equal(png.begin(), png.end(), head.begin())) return true;
    if (head[0] == 0xFF && head[1] == 0xD8 && head[2] == 0xFF) return true;  // JPEG
    if (head[0] == 'B' && head[1] == 'M') return true;                       // BMP
    return false;
}

// Decodes to 3-channel RGB float in [0,1].
inline Image read_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty())
        throw std::runtime_error("failed to decode image: " + path.string());
    Image img(3, bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            img.at(0, y, x) = row[x][2] / 255.f;
            img.at(1, y, x) = row[x][1] / 255.f;
            img.at(2, y, x) = row[x][0] / 255.f;
        }
    }
    return img;
}

inline void write_image(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 3 && img.channels != 1)
        throw std::invalid_argument("write_image: expected 1 or 3 channels");
    cv::Mat mat(img.height, img.width, img.channels == 3 ? CV_8UC3 : CV_8UC1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            auto to_byte = [](float v) {
                return static_cast<unsigned char>(
                    std::min(255.f, std::max(0.f, std::round(v * 255.f))));
            };
            if (img.channels == 3) {
                mat.at<cv::Vec3b>(y, x) = cv::Vec3b(to_byte(img.at(2, y, x)),
                                                    to_byte(img.at(1, y, x)),
                                                    to_byte(img.at(0, y, x)));
            } else {
                mat.at<unsigned char>(y, x) = to_byte(img.at(0, y, x));
            }
        }
    }
    if (!cv::imwrite(path.string(), mat))
        throw std::runtime_error("failed to write image: " + path.string());
}

}  // namespace solarnet
