#include "cmfd/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/features2d.hpp>

namespace cmfd {

namespace {

constexpr const char* kCsvHeader = "x,y,scale,orientation,d0..d127";

cv::Mat to_cv8u(const GrayImage& img) {
    cv::Mat mat(img.height, img.width, CV_8UC1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double v = std::clamp(img.at(x, y), 0.0, 255.0);
            mat.at<uint8_t>(y, x) = static_cast<uint8_t>(std::lround(v));
        }
    }
    return mat;
}

struct RawKeypoint {
    cv::KeyPoint kp;
    int desc_row;
};

}  // namespace

DescriptorSet detect_and_describe(const GrayImage& img, const DetectorParams& params) {
    DescriptorSet out;
    if (img.width < 16 || img.height < 16) {
        return out;  // too small to host a descriptor window; not an error
    }

    // Keep the detector single-threaded: keypoint order then depends only on
    // the image, never on scheduling.
    cv::setNumThreads(1);

    auto sift = cv::SIFT::create(0, params.octave_layers, params.contrast_threshold,
                                 params.edge_threshold, params.sigma);
    std::vector<cv::KeyPoint> kps;
    cv::Mat desc;
    sift->detectAndCompute(to_cv8u(img), cv::noArray(), kps, desc);

    std::vector<RawKeypoint> raw;
    raw.reserve(kps.size());
    const double b = params.border;
    for (size_t i = 0; i < kps.size(); ++i) {
        const auto& kp = kps[i];
        if (kp.pt.x < b || kp.pt.y < b || kp.pt.x > img.width - 1 - b ||
            kp.pt.y > img.height - 1 - b) {
            continue;  // descriptor window would leave the image
        }
        raw.push_back({kp, static_cast<int>(i)});
    }

    // Deterministic order, then drop duplicates at identical (x, y, scale)
    // keeping the strongest response (they would otherwise produce degenerate
    // zero-distance matches).
    std::sort(raw.begin(), raw.end(), [](const RawKeypoint& a, const RawKeypoint& b) {
        if (a.kp.pt.y != b.kp.pt.y) return a.kp.pt.y < b.kp.pt.y;
        if (a.kp.pt.x != b.kp.pt.x) return a.kp.pt.x < b.kp.pt.x;
        if (a.kp.size != b.kp.size) return a.kp.size < b.kp.size;
        if (a.kp.response != b.kp.response) return a.kp.response > b.kp.response;
        return a.kp.angle < b.kp.angle;
    });

    std::vector<RawKeypoint> unique;
    unique.reserve(raw.size());
    for (const auto& r : raw) {
        if (!unique.empty()) {
            const auto& prev = unique.back().kp;
            if (prev.pt.x == r.kp.pt.x && prev.pt.y == r.kp.pt.y && prev.size == r.kp.size) {
                continue;  // sorted so the strongest response comes first
            }
        }
        unique.push_back(r);
    }

    out.keypoints.reserve(unique.size());
    out.descriptors.reserve(unique.size() * kDescriptorDim);
    const double two_pi = 2.0 * std::numbers::pi;
    for (const auto& r : unique) {
        Keypoint kp;
        kp.x = r.kp.pt.x;
        kp.y = r.kp.pt.y;
        kp.scale = r.kp.size;
        double rad = r.kp.angle * std::numbers::pi / 180.0;
        rad = std::fmod(rad, two_pi);
        if (rad < 0) rad += two_pi;
        kp.orientation = rad;
        out.keypoints.push_back(kp);

        const float* row = desc.ptr<float>(r.desc_row);
        double norm_sq = 0.0;
        for (int j = 0; j < kDescriptorDim; ++j) norm_sq += double(row[j]) * row[j];
        const double inv = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
        for (int j = 0; j < kDescriptorDim; ++j) {
            out.descriptors.push_back(row[j] * inv);
        }
    }
    return out;
}

void save_keypoints(const DescriptorSet& ds, const std::string& path) {
    std::ofstream fout(path);
    if (!fout) {
        throw std::runtime_error("save_keypoints: cannot write '" + path + "'");
    }
    fout << kCsvHeader << "\n";
    char buf[64];
    for (size_t i = 0; i < ds.size(); ++i) {
        const auto& kp = ds.keypoints[i];
        auto put = [&](double v, char sep) {
            const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
            fout.write(buf, n);
            fout.put(sep);
        };
        put(kp.x, ',');
        put(kp.y, ',');
        put(kp.scale, ',');
        put(kp.orientation, ',');
        const auto d = ds.descriptor(i);
        for (int j = 0; j < kDescriptorDim; ++j) {
            put(d[j], j + 1 < kDescriptorDim ? ',' : '\n');
        }
    }
    if (!fout) {
        throw std::runtime_error("save_keypoints: write failed for '" + path + "'");
    }
}

DescriptorSet load_keypoints(const std::string& path) {
    std::ifstream fin(path);
    if (!fin) {
        throw std::runtime_error("load_keypoints: cannot read '" + path + "'");
    }
    std::string line;
    if (!std::getline(fin, line)) {
        throw std::runtime_error("load_keypoints: '" + path + "' is empty (missing header)");
    }
    if (line.rfind("x,y,scale,orientation", 0) != 0) {
        throw std::runtime_error("load_keypoints: '" + path + "' line 1: unexpected header");
    }

    DescriptorSet ds;
    size_t lineno = 1;
    while (std::getline(fin, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        vals.reserve(4 + kDescriptorDim);
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end) {
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{}) {
                throw std::runtime_error("load_keypoints: '" + path + "' line " +
                                         std::to_string(lineno) + ": malformed value");
            }
            vals.push_back(v);
            p = next;
            if (p < end) {
                if (*p != ',') {
                    throw std::runtime_error("load_keypoints: '" + path + "' line " +
                                             std::to_string(lineno) + ": expected ','");
                }
                ++p;
            }
        }
        if (vals.size() != 4 + kDescriptorDim) {
            throw std::runtime_error("load_keypoints: '" + path + "' line " +
                                     std::to_string(lineno) + ": expected " +
                                     std::to_string(4 + kDescriptorDim) + " values, got " +
                                     std::to_string(vals.size()));
        }
        Keypoint kp{vals[0], vals[1], vals[2], vals[3]};
        ds.keypoints.push_back(kp);
        ds.descriptors.insert(ds.descriptors.end(), vals.begin() + 4, vals.end());
    }
    return ds;
}

}  // namespace cmfd
