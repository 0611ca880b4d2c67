#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vertx/ensemble.hpp"
#include "vertx/errors.hpp"
#include "vertx/geometry.hpp"
#include "vertx/vertebra_label.hpp"

namespace vertx {

enum class ReferenceKind : std::uint8_t { C2Reference, S1Reference };

inline std::string to_string(ReferenceKind k) {
    return k == ReferenceKind::C2Reference ? "C2" : "S1";
}

/// A reference-vertebra detection as supplied by the instance provider.
struct ReferenceDetection {
    ReferenceKind kind = ReferenceKind::C2Reference;
    Contour contour;
    double score = 0.0;
};

enum class VertebraFlag : std::uint8_t {
    None,
    Extrapolated,           ///< label outside the ranges films normally cover
    ChainExhausted,         ///< ran past the end of the anatomical chain
    AnatomicallyImpossible, ///< mask on the wrong side of the reference
};

inline std::string to_string(VertebraFlag f) {
    switch (f) {
        case VertebraFlag::None: return "none";
        case VertebraFlag::Extrapolated: return "extrapolated";
        case VertebraFlag::ChainExhausted: return "chain_exhausted";
        default: return "anatomically_impossible";
    }
}

struct LabeledVertebra {
    Contour contour;
    std::optional<VertebraLabel> label;
    VertebraFlag flag = VertebraFlag::None;
};

/// The identification output: contours top-to-bottom with anatomical names
/// zipped out from the reference vertebra.
struct LabeledSpine {
    ImageFrame frame;
    std::vector<LabeledVertebra> vertebrae;  // sorted top to bottom
    ReferenceKind reference = ReferenceKind::C2Reference;
    std::size_t reference_index = 0;
};

struct FindReferenceResult {
    ReferenceDetection detection;  ///< bound to a contour of `ensembled` below
    ContourSet ensembled;          ///< re-sorted; grows by one if injection was needed
    std::size_t reference_index = 0;
    bool injected = false;
    bool both_references = false;
};

// ---------------------------------------------------------------------------

/// Locate the reference vertebra (C2 or S1) among the instance provider's
/// labeled contours and bind it to the ensembled contour it overlaps most.
/// When no ensembled contour passes the agreement threshold the reference
/// contour itself is injected into the set.
inline FindReferenceResult find_reference(const ContourSet& instance, const ContourSet& ensembled,
                                          const EnsembleConfig& cfg) {
    cfg.validate();
    if (!instance.frame.same_dimensions(ensembled.frame)) {
        throw FrameMismatch("instance and ensembled frames differ");
    }

    struct Candidate {
        ReferenceKind kind;
        const Contour* contour;
        double score;
        std::size_t index;
    };
    std::vector<Candidate> candidates;
    bool saw_c2 = false, saw_s1 = false;
    for (std::size_t i = 0; i < instance.contours.size(); ++i) {
        const Contour& c = instance.contours[i];
        if (!c.label) continue;
        if (*c.label == VertebraLabel::C2) {
            candidates.push_back({ReferenceKind::C2Reference, &c, c.score.value_or(0.0), i});
            saw_c2 = true;
        } else if (*c.label == VertebraLabel::S1) {
            candidates.push_back({ReferenceKind::S1Reference, &c, c.score.value_or(0.0), i});
            saw_s1 = true;
        }
    }
    if (candidates.empty()) {
        throw NoReferenceFound("no contour labeled C2 or S1 in the instance set");
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    const Candidate& best = candidates.front();

    FindReferenceResult result;
    result.both_references = saw_c2 && saw_s1;
    if (result.both_references) {
        log::warn("both C2 and S1 detections present; keeping " + to_string(best.kind) +
                  " (score " + std::to_string(best.score) + ")");
    }
    result.detection.kind = best.kind;
    result.detection.score = best.score;
    result.ensembled = vertical_sort(ensembled);

    const MaskGrid ref_mask = rasterize(*best.contour, instance.frame);
    const std::int64_t ref_area = ref_mask.area();

    double best_delta = -1.0;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < result.ensembled.contours.size(); ++i) {
        const MaskGrid m = rasterize(result.ensembled.contours[i], result.ensembled.frame);
        const double d = static_cast<double>(MaskGrid::intersect_count(ref_mask, m)) /
                         static_cast<double>(std::max(ref_area, m.area()));
        if (d > best_delta) {
            best_delta = d;
            best_index = i;
        }
    }

    if (best_delta >= 0.0 && cfg.exceeds(best_delta)) {
        result.reference_index = best_index;
        result.detection.contour = result.ensembled.contours[best_index];
        return result;
    }

    // No ensembled mask matches the detection; inject the reference contour.
    Contour injected = *best.contour;
    injected.source = Source::Ensemble;
    injected.label.reset();
    injected.score.reset();
    result.ensembled.contours.push_back(injected);
    result.ensembled = vertical_sort(result.ensembled);
    result.injected = true;
    log::warn("reference " + to_string(best.kind) +
              " had no ensembled counterpart; injected the detection contour");

    for (std::size_t i = 0; i < result.ensembled.contours.size(); ++i) {
        if (same_geometry(result.ensembled.contours[i], injected)) {
            result.reference_index = i;
            break;
        }
    }
    result.detection.contour = result.ensembled.contours[result.reference_index];
    return result;
}

// ---------------------------------------------------------------------------

/// Zip anatomical names along the vertically sorted column, starting from the
/// bound reference: C2 zips down with successors, S1 zips up with
/// predecessors. Masks that fall off the chain or sit on the wrong side of
/// the reference are flagged and left unlabeled.
inline LabeledSpine assign_labels(const ContourSet& ensembled, const ReferenceDetection& ref) {
    ContourSet sorted = vertical_sort(ensembled);

    std::optional<std::size_t> ref_index;
    for (std::size_t i = 0; i < sorted.contours.size(); ++i) {
        if (same_geometry(sorted.contours[i], ref.contour)) {
            ref_index = i;
            break;
        }
    }
    if (!ref_index) {
        throw NoReferenceFound("reference detection is not bound to any ensembled contour");
    }

    LabeledSpine spine;
    spine.frame = sorted.frame;
    spine.reference = ref.kind;
    spine.reference_index = *ref_index;
    spine.vertebrae.reserve(sorted.contours.size());
    for (const Contour& c : sorted.contours) {
        spine.vertebrae.push_back({c, std::nullopt, VertebraFlag::None});
    }

    auto apply_flagged = [](LabeledVertebra& v, std::optional<VertebraLabel> label) {
        if (label) {
            v.label = label;
            v.flag = is_extrapolated(*label) ? VertebraFlag::Extrapolated : VertebraFlag::None;
        } else {
            v.flag = VertebraFlag::ChainExhausted;
        }
    };

    if (ref.kind == ReferenceKind::C2Reference) {
        spine.vertebrae[*ref_index].label = VertebraLabel::C2;
        std::optional<VertebraLabel> next = VertebraLabel::C2;
        for (std::size_t i = *ref_index + 1; i < spine.vertebrae.size(); ++i) {
            next = next ? successor(*next) : std::nullopt;
            apply_flagged(spine.vertebrae[i], next);
        }
        for (std::size_t i = 0; i < *ref_index; ++i) {
            spine.vertebrae[i].flag = VertebraFlag::AnatomicallyImpossible;
        }
    } else {
        spine.vertebrae[*ref_index].label = VertebraLabel::S1;
        std::optional<VertebraLabel> next = VertebraLabel::S1;
        for (std::size_t i = *ref_index; i-- > 0;) {
            next = next ? predecessor(*next) : std::nullopt;
            apply_flagged(spine.vertebrae[i], next);
        }
        for (std::size_t i = *ref_index + 1; i < spine.vertebrae.size(); ++i) {
            spine.vertebrae[i].flag = VertebraFlag::AnatomicallyImpossible;
        }
    }
    return spine;
}

} // namespace vertx
