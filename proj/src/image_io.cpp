#include "cmfd/image_io.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>

namespace cmfd {

namespace {

constexpr double kRedWeight = 0.299;
constexpr double kGreenWeight = 0.587;
constexpr double kBlueWeight = 0.114;

GrayImage from_cv(const cv::Mat& mat) {
    GrayImage img(mat.cols, mat.rows);
    const int channels = mat.channels();
    for (int y = 0; y < mat.rows; ++y) {
        for (int x = 0; x < mat.cols; ++x) {
            double v = 0.0;
            if (channels == 1) {
                v = mat.depth() == CV_16U
                        ? mat.at<uint16_t>(y, x) / 257.0
                        : static_cast<double>(mat.at<uint8_t>(y, x));
            } else {
                // OpenCV decodes color images in BGR(A) channel order.
                const uint8_t* px = mat.ptr<uint8_t>(y) + static_cast<size_t>(x) * channels;
                v = kBlueWeight * px[0] + kGreenWeight * px[1] + kRedWeight * px[2];
            }
            img.at(x, y) = v;
        }
    }
    return img;
}

}  // namespace

GrayImage load_image(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw std::runtime_error("load_image: cannot read '" + path + "'");
    }
    cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (mat.empty()) {
        throw std::runtime_error("load_image: undecodable image '" + path + "'");
    }
    if (mat.depth() != CV_8U && mat.depth() != CV_16U) {
        throw std::runtime_error("load_image: unsupported bit depth in '" + path + "'");
    }
    return from_cv(mat);
}

void write_mask(const Mask& mask, const std::string& path) {
    cv::Mat out(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            out.at<uint8_t>(y, x) = mask.at(x, y) ? 255 : 0;
        }
    }
    if (!cv::imwrite(path, out)) {
        throw std::runtime_error("write_mask: cannot write '" + path + "'");
    }
}

Mask read_mask(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw std::runtime_error("read_mask: cannot read '" + path + "'");
    }
    cv::Mat mat = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (mat.empty()) {
        throw std::runtime_error("read_mask: undecodable image '" + path + "'");
    }
    Mask mask(mat.cols, mat.rows);
    for (int y = 0; y < mat.rows; ++y) {
        for (int x = 0; x < mat.cols; ++x) {
            mask.set(x, y, mat.at<uint8_t>(y, x) != 0 ? 1 : 0);
        }
    }
    return mask;
}

void write_gray(const GrayImage& img, const std::string& path) {
    cv::Mat out(img.height, img.width, CV_8UC1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double v = std::clamp(img.at(x, y), 0.0, 255.0);
            out.at<uint8_t>(y, x) = static_cast<uint8_t>(std::lround(v));
        }
    }
    if (!cv::imwrite(path, out)) {
        throw std::runtime_error("write_gray: cannot write '" + path + "'");
    }
}

void write_overlay(const GrayImage& img, const Mask& mask, const std::string& path) {
    cv::Mat out(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const uint8_t g = static_cast<uint8_t>(std::lround(std::clamp(img.at(x, y), 0.0, 255.0)));
            cv::Vec3b px(g, g, g);
            if (mask.width == img.width && mask.height == img.height && mask.at(x, y)) {
                px = cv::Vec3b(g / 2, g / 2, static_cast<uint8_t>(g / 2 + 128));
            }
            out.at<cv::Vec3b>(y, x) = px;
        }
    }
    if (!cv::imwrite(path, out)) {
        throw std::runtime_error("write_overlay: cannot write '" + path + "'");
    }
}

}  // namespace cmfd
