#include "cmfd/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cmfd/image_io.hpp"

namespace cmfd {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const std::array<AttackParams, 15> kStandardAttacks = {{
    {"A1", 1.0, 1.0, 0.0},
    {"A2", 1.0, 1.0, 10.0},
    {"A3", 1.0, 1.0, 20.0},
    {"A4", 1.0, 1.0, 30.0},
    {"A5", 1.0, 1.0, 40.0},
    {"A6", 1.0, 1.0, 50.0},
    {"A7", 1.2, 1.2, 0.0},
    {"A8", 1.3, 1.3, 0.0},
    {"A9", 0.8, 0.8, 0.0},
    {"A10", 0.75, 0.85, 0.0},
    {"A11", 0.85, 0.75, 0.0},
    {"A12", 1.2, 1.2, 30.0},
    {"A13", 0.8, 0.8, 30.0},
    {"A14", 0.75, 0.85, 35.0},
    {"A15", 1.4, 1.2, 35.0},
}};

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

AffineTransform attack_transform(const AttackSpec& spec) {
    const Vec2 center{spec.src_x + (spec.src_w - 1) / 2.0, spec.src_y + (spec.src_h - 1) / 2.0};
    AffineTransform h = AffineTransform::from_rotation_scale(spec.theta_deg * kDeg, spec.sx,
                                                             spec.sy, 0.0, 0.0);
    const Vec2 rotated_center = h.apply_linear(center);
    h.tx = center.x - rotated_center.x + (spec.dest_x - spec.src_x);
    h.ty = center.y - rotated_center.y + (spec.dest_y - spec.src_y);
    return h;
}

}  // namespace

std::span<const AttackParams> standard_attack_params() { return kStandardAttacks; }

std::vector<AttackSpec> standard_attacks(int src_x, int src_y, int src_w, int src_h,
                                         double dest_x, double dest_y) {
    std::vector<AttackSpec> out;
    out.reserve(kStandardAttacks.size());
    for (const auto& p : kStandardAttacks) {
        AttackSpec spec;
        spec.name = p.name;
        spec.sx = p.sx;
        spec.sy = p.sy;
        spec.theta_deg = p.theta_deg;
        spec.src_x = src_x;
        spec.src_y = src_y;
        spec.src_w = src_w;
        spec.src_h = src_h;
        spec.dest_x = dest_x;
        spec.dest_y = dest_y;
        out.push_back(std::move(spec));
    }
    return out;
}

ForgeryResult apply_attack(const GrayImage& img, const AttackSpec& spec) {
    if (spec.sx <= 0.0 || spec.sy <= 0.0) {
        throw std::invalid_argument("apply_attack: scale factors must be positive");
    }
    if (spec.src_w <= 0 || spec.src_h <= 0 || spec.src_x < 0 || spec.src_y < 0 ||
        spec.src_x + spec.src_w > img.width || spec.src_y + spec.src_h > img.height) {
        throw std::invalid_argument("apply_attack: source rectangle outside the image");
    }
    const AffineTransform h = attack_transform(spec);

    // The source region covers the pixel areas of the rectangle.
    const double rx0 = spec.src_x - 0.5, rx1 = spec.src_x + spec.src_w - 0.5;
    const double ry0 = spec.src_y - 0.5, ry1 = spec.src_y + spec.src_h - 0.5;
    const std::array<Vec2, 4> corners = {
        h.apply({rx0, ry0}), h.apply({rx1, ry0}), h.apply({rx0, ry1}), h.apply({rx1, ry1})};
    double bx0 = corners[0].x, bx1 = corners[0].x, by0 = corners[0].y, by1 = corners[0].y;
    for (const Vec2& c : corners) {
        bx0 = std::min(bx0, c.x);
        bx1 = std::max(bx1, c.x);
        by0 = std::min(by0, c.y);
        by1 = std::max(by1, c.y);
    }
    if (bx0 < -0.5 || by0 < -0.5 || bx1 > img.width - 0.5 || by1 > img.height - 0.5) {
        throw std::invalid_argument("apply_attack: transformed region leaves the image");
    }

    ForgeryResult out;
    out.forged = img;
    out.truth = Mask(img.width, img.height);
    out.transform = h;

    for (int y = spec.src_y; y < spec.src_y + spec.src_h; ++y) {
        for (int x = spec.src_x; x < spec.src_x + spec.src_w; ++x) {
            out.truth.set(x, y, 1);
        }
    }

    const AffineTransform inv = h.inverse();
    const int px0 = std::max(0, static_cast<int>(std::floor(bx0)) - 1);
    const int px1 = std::min(img.width - 1, static_cast<int>(std::ceil(bx1)) + 1);
    const int py0 = std::max(0, static_cast<int>(std::floor(by0)) - 1);
    const int py1 = std::min(img.height - 1, static_cast<int>(std::ceil(by1)) + 1);
    constexpr int kSub = 4;  // 4x4 coverage supersampling
    for (int y = py0; y <= py1; ++y) {
        for (int x = px0; x <= px1; ++x) {
            int inside = 0;
            for (int sy = 0; sy < kSub; ++sy) {
                for (int sx = 0; sx < kSub; ++sx) {
                    const Vec2 sub{x + (sx + 0.5) / kSub - 0.5, y + (sy + 0.5) / kSub - 0.5};
                    const Vec2 q = inv.apply(sub);
                    if (q.x >= rx0 && q.x < rx1 && q.y >= ry0 && q.y < ry1) ++inside;
                }
            }
            if (inside == 0) continue;
            const double coverage = static_cast<double>(inside) / (kSub * kSub);
            const Vec2 src = inv.apply({static_cast<double>(x), static_cast<double>(y)});
            const double value = sample_bilinear(img, src.x, src.y);
            out.forged.at(x, y) = (1.0 - coverage) * img.at(x, y) + coverage * value;
            if (coverage >= 0.5) out.truth.set(x, y, 1);
        }
    }
    return out;
}

std::optional<TransformErrors> score_transform(const AffineTransform& truth,
                                               const AffineTransform& estimated) {
    const auto dt = decompose_affine(truth);
    const auto de = decompose_affine(estimated);
    if (!dt || !de) return std::nullopt;
    TransformErrors err;
    double dtheta = std::abs(dt->theta - de->theta) * 180.0 / std::numbers::pi;
    dtheta = std::fmod(dtheta, 360.0);
    if (dtheta > 180.0) dtheta = 360.0 - dtheta;
    err.theta_deg = dtheta;
    err.sx = std::abs(dt->sx - de->sx);
    err.sy = std::abs(dt->sy - de->sy);
    err.tx = std::abs(dt->tx - de->tx);
    err.ty = std::abs(dt->ty - de->ty);
    return err;
}

ImageScore score_image_level(const std::vector<std::pair<bool, bool>>& decisions) {
    if (decisions.empty()) {
        throw std::invalid_argument("score_image_level: no decisions");
    }
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& [truth, predicted] : decisions) {
        if (truth && predicted) ++tp;
        if (!truth && predicted) ++fp;
        if (!truth && !predicted) ++tn;
        if (truth && !predicted) ++fn;
    }
    ImageScore score;
    score.tpr = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : nan_value();
    score.fpr = (fp + tn) > 0 ? static_cast<double>(fp) / (fp + tn) : nan_value();
    return score;
}

PixelScore score_pixel_level(const Mask& truth, const Mask& predicted) {
    if (truth.width != predicted.width || truth.height != predicted.height) {
        throw std::invalid_argument("score_pixel_level: mask dimensions differ");
    }
    PixelScore s;
    for (size_t i = 0; i < truth.data.size(); ++i) {
        const bool t = truth.data[i] != 0;
        const bool p = predicted.data[i] != 0;
        if (t && p) ++s.tp;
        if (!t && p) ++s.fp;
        if (!t && !p) ++s.tn;
        if (t && !p) ++s.fn;
    }
    s.tpr = (s.tp + s.fn) > 0 ? static_cast<double>(s.tp) / (s.tp + s.fn) : nan_value();
    s.fpr = (s.fp + s.tn) > 0 ? static_cast<double>(s.fp) / (s.fp + s.tn) : nan_value();
    return s;
}

std::optional<AffineTransform> best_matching_transform(const ClusterState& state,
                                                       const AffineTransform& truth) {
    auto entry_distance = [&](const AffineTransform& a) {
        const double d[6] = {a.a11 - truth.a11, a.a12 - truth.a12, a.a21 - truth.a21,
                             a.a22 - truth.a22, a.tx - truth.tx,   a.ty - truth.ty};
        double acc = 0.0;
        for (double v : d) acc += v * v;
        return acc;
    };
    std::optional<AffineTransform> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < state.cluster_count; ++i) {
        if (state.degenerate[i] || state.empty_cluster[i]) continue;
        const AffineTransform& h = state.transforms[i];
        for (int side = 0; side < 2; ++side) {
            AffineTransform cand = h;
            if (side == 1) {
                if (h.det() == 0.0) continue;
                cand = h.inverse();
            }
            const double d = entry_distance(cand);
            if (d < best_dist) {
                best_dist = d;
                best = cand;
            }
        }
    }
    return best;
}

EvalReport run_benchmark(const std::string& originals_dir,
                         const std::vector<AttackSpec>& attacks, const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(originals_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw std::runtime_error("run_benchmark: no readable originals in '" + originals_dir +
                                 "'");
    }

    EvalReport report;
    std::vector<std::pair<bool, bool>> decisions;
    double tpr_sum = 0.0, fpr_sum = 0.0;
    int pixel_records = 0;
    TransformErrors mae_sum;
    int mae_records = 0;

    for (const auto& file : files) {
        const std::string name = fs::path(file).filename().string();
        GrayImage original;
        try {
            original = load_image(file);
        } catch (const std::exception& e) {
            EvalImageRecord rec;
            rec.name = name;
            rec.failure = e.what();
            report.records.push_back(std::move(rec));
            continue;
        }

        {
            EvalImageRecord rec;
            rec.name = name;
            rec.truth_forged = false;
            rec.pixel_tpr = nan_value();
            rec.pixel_fpr = nan_value();
            try {
                const DetectionResult det = detect_forgery(original, cfg);
                rec.predicted = det.is_forged;
                decisions.emplace_back(false, det.is_forged);
            } catch (const std::exception& e) {
                rec.failure = e.what();
            }
            report.records.push_back(std::move(rec));
        }

        for (const auto& attack : attacks) {
            EvalImageRecord rec;
            rec.name = name;
            rec.attack = attack.name;
            rec.truth_forged = true;
            rec.pixel_tpr = nan_value();
            rec.pixel_fpr = nan_value();
            try {
                const ForgeryResult forged = apply_attack(original, attack);
                const DetectionResult det = detect_forgery(forged.forged, cfg);
                rec.predicted = det.is_forged;
                decisions.emplace_back(true, det.is_forged);
                const PixelScore px = score_pixel_level(forged.truth, det.mask);
                rec.pixel_tpr = px.tpr;
                rec.pixel_fpr = px.fpr;
                tpr_sum += px.tpr;
                fpr_sum += px.fpr;
                ++pixel_records;
                if (det.optimizer_ran) {
                    if (auto est = best_matching_transform(det.state, forged.transform)) {
                        rec.errors = score_transform(forged.transform, *est);
                        if (rec.errors) {
                            mae_sum.theta_deg += rec.errors->theta_deg;
                            mae_sum.sx += rec.errors->sx;
                            mae_sum.sy += rec.errors->sy;
                            mae_sum.tx += rec.errors->tx;
                            mae_sum.ty += rec.errors->ty;
                            ++mae_records;
                        }
                    }
                }
            } catch (const std::exception& e) {
                rec.failure = e.what();
            }
            report.records.push_back(std::move(rec));
        }
    }

    report.image = decisions.empty() ? ImageScore{nan_value(), nan_value()}
                                     : score_image_level(decisions);
    report.pixel_tpr_mean = pixel_records > 0 ? tpr_sum / pixel_records : nan_value();
    report.pixel_fpr_mean = pixel_records > 0 ? fpr_sum / pixel_records : nan_value();
    if (mae_records > 0) {
        TransformErrors mae = mae_sum;
        mae.theta_deg /= mae_records;
        mae.sx /= mae_records;
        mae.sy /= mae_records;
        mae.tx /= mae_records;
        mae.ty /= mae_records;
        report.mae = mae;
    }
    return report;
}

namespace {

nlohmann::json errors_to_json(const TransformErrors& e) {
    return {{"theta_deg", e.theta_deg}, {"sx", e.sx}, {"sy", e.sy}, {"tx", e.tx}, {"ty", e.ty}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    nlohmann::json root;
    root["version"] = 1;
    nlohmann::json summary;
    summary["image_tpr"] = report.image.tpr;
    summary["image_fpr"] = report.image.fpr;
    summary["pixel_tpr_mean"] = report.pixel_tpr_mean;
    summary["pixel_fpr_mean"] = report.pixel_fpr_mean;
    summary["mae"] = report.mae ? errors_to_json(*report.mae) : nlohmann::json();
    root["summary"] = std::move(summary);

    nlohmann::json images = nlohmann::json::array();
    for (const auto& rec : report.records) {
        nlohmann::json r;
        r["name"] = rec.name;
        r["attack"] = rec.attack;
        r["truth_forged"] = rec.truth_forged;
        r["predicted"] = rec.predicted;
        r["pixel_tpr"] = rec.pixel_tpr;
        r["pixel_fpr"] = rec.pixel_fpr;
        r["errors"] = rec.errors ? errors_to_json(*rec.errors) : nlohmann::json();
        r["failure"] = rec.failure;
        images.push_back(std::move(r));
    }
    root["images"] = std::move(images);
    return root.dump(2);
}

std::vector<AttackSpec> load_attack_manifest(const std::string& path) {
    std::ifstream fin(path);
    if (!fin) {
        throw std::runtime_error("load_attack_manifest: cannot read '" + path + "'");
    }
    nlohmann::json root = nlohmann::json::parse(fin);
    const nlohmann::json& list = root.is_array() ? root : root.at("attacks");
    std::vector<AttackSpec> attacks;
    for (const auto& a : list) {
        AttackSpec spec;
        spec.name = a.value("name", "attack" + std::to_string(attacks.size() + 1));
        spec.sx = a.at("sx").get<double>();
        spec.sy = a.at("sy").get<double>();
        spec.theta_deg = a.at("theta_deg").get<double>();
        spec.src_x = a.at("src").at(0).get<int>();
        spec.src_y = a.at("src").at(1).get<int>();
        spec.src_w = a.at("src").at(2).get<int>();
        spec.src_h = a.at("src").at(3).get<int>();
        spec.dest_x = a.at("dest").at(0).get<double>();
        spec.dest_y = a.at("dest").at(1).get<double>();
        attacks.push_back(std::move(spec));
    }
    return attacks;
}

std::string attacks_to_json(const std::vector<AttackSpec>& attacks) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& a : attacks) {
        nlohmann::json j;
        j["name"] = a.name;
        j["sx"] = a.sx;
        j["sy"] = a.sy;
        j["theta_deg"] = a.theta_deg;
        j["src"] = {a.src_x, a.src_y, a.src_w, a.src_h};
        j["dest"] = {a.dest_x, a.dest_y};
        list.push_back(std::move(j));
    }
    return list.dump(2);
}

}  // namespace cmfd
