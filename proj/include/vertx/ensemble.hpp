#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vertx/errors.hpp"
#include "vertx/geometry.hpp"

namespace vertx {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct EnsembleConfig {
    double eta = 0.6;          ///< agreement threshold
    double lambda = 2.0;       ///< pickup interval half-width, in sigmas
    bool strict_greater = true;

    void validate() const {
        if (!(eta > 0.0 && eta < 1.0)) {
            throw InvalidConfig("eta must lie in (0,1), got " + std::to_string(eta));
        }
        if (!(lambda >= 0.0)) {
            throw InvalidConfig("lambda must be non-negative, got " + std::to_string(lambda));
        }
    }

    /// The threshold comparison used by every rule.
    bool exceeds(double value) const {
        return strict_greater ? value > eta : value >= eta;
    }
};

// ---------------------------------------------------------------------------
// Pairwise criteria
// ---------------------------------------------------------------------------

/// Agreement between two contours: overlap divided by the larger mask.
inline double agreement(const Contour& cu, const Contour& cm, const ImageFrame& frame) {
    const MaskGrid a = rasterize(cu, frame);
    const MaskGrid b = rasterize(cm, frame);
    const std::int64_t inter = intersection_area(a, b);
    return static_cast<double>(inter) / static_cast<double>(std::max(a.area(), b.area()));
}

/// Overlap ratio: overlap divided by the instance-provider mask. Asymmetric;
/// a large value with small agreement means the semantic contour is a blob
/// covering this instance mask.
inline double overlap_ratio(const Contour& cu, const Contour& cm, const ImageFrame& frame) {
    const MaskGrid a = rasterize(cu, frame);
    const MaskGrid b = rasterize(cm, frame);
    return static_cast<double>(intersection_area(a, b)) / static_cast<double>(b.area());
}

// ---------------------------------------------------------------------------
// Outcome bookkeeping
// ---------------------------------------------------------------------------

enum class EnsembleRule : std::uint8_t { Agreement, OverlapResolution, Pickup };

inline std::string to_string(EnsembleRule r) {
    switch (r) {
        case EnsembleRule::Agreement: return "agreement";
        case EnsembleRule::OverlapResolution: return "overlap_resolution";
        default: return "pickup";
    }
}

/// Which rule admitted a contour. Indices refer to positions in the
/// vertically sorted input sets.
struct Provenance {
    EnsembleRule rule = EnsembleRule::Agreement;
    std::optional<std::size_t> semantic_index;
    std::optional<std::size_t> instance_index;
};

enum class RejectReason : std::uint8_t { AreaOutsideInterval, OverlapsEnsembled };

inline std::string to_string(RejectReason r) {
    return r == RejectReason::AreaOutsideInterval ? "area_outside_interval" : "overlaps_ensembled";
}

struct RejectedContour {
    Contour contour;
    RejectReason reason = RejectReason::AreaOutsideInterval;
    std::string detail;
};

struct EnsembleStats {
    double mu = 0.0;     ///< mean ensembled mask area, pixels
    double sigma = 0.0;  ///< sample standard deviation of ensembled areas
};

struct EnsembleOutcome {
    ContourSet ensembled;                    ///< source Ensemble, vertically sorted
    std::vector<Provenance> provenance;      ///< one record per ensembled contour
    std::vector<RejectedContour> rejected;
    EnsembleStats stats;                     ///< recomputed over the final list
    std::vector<std::string> warnings;

    bool empty() const { return ensembled.empty(); }
};

// ---------------------------------------------------------------------------
// Algorithm
// ---------------------------------------------------------------------------

namespace detail {

struct PoolEntry {
    Contour contour;
    MaskGrid mask;
    MaskGrid::PixelSums sums;
    std::int64_t area = 0;
    std::size_t sorted_index = 0;  // position in the vertically sorted input
    bool is_semantic = false;
    bool consumed = false;
};

inline std::vector<PoolEntry> build_pool(const ContourSet& sorted, bool is_semantic) {
    std::vector<PoolEntry> pool;
    pool.reserve(sorted.contours.size());
    for (std::size_t i = 0; i < sorted.contours.size(); ++i) {
        PoolEntry e;
        e.contour = sorted.contours[i];
        e.mask = rasterize(e.contour, sorted.frame);
        e.sums = e.mask.pixel_sums();
        e.area = e.sums.count;
        e.sorted_index = i;
        e.is_semantic = is_semantic;
        pool.push_back(std::move(e));
    }
    return pool;
}

struct EnsembleEntry {
    Contour contour;
    MaskGrid mask;
    std::int64_t area = 0;
    Provenance provenance;
};

inline double delta(const MaskGrid& a, std::int64_t area_a, const MaskGrid& b, std::int64_t area_b) {
    return static_cast<double>(MaskGrid::intersect_count(a, b)) /
           static_cast<double>(std::max(area_a, area_b));
}

inline EnsembleStats area_stats(const std::vector<std::int64_t>& areas) {
    EnsembleStats s;
    if (areas.empty()) return s;
    double sum = 0.0;
    for (std::int64_t a : areas) sum += static_cast<double>(a);
    s.mu = sum / static_cast<double>(areas.size());
    if (areas.size() > 1) {
        double ss = 0.0;
        for (std::int64_t a : areas) {
            const double d = static_cast<double>(a) - s.mu;
            ss += d * d;
        }
        s.sigma = std::sqrt(ss / static_cast<double>(areas.size() - 1));
    }
    return s;
}

} // namespace detail

/// Merge two candidate segmentations of the same image into one contour set.
///
/// Stage A pairs up contours the providers agree on and adds their union.
/// Stage B rescues instance masks hidden inside an oversized semantic blob.
/// Stage C picks up leftovers whose area is close to the ensembled mean,
/// guarded against duplicating something already accepted.
inline EnsembleOutcome run_ensemble(const ContourSet& semantic, const ContourSet& instance,
                                    const EnsembleConfig& cfg) {
    cfg.validate();
    if (!semantic.frame.same_dimensions(instance.frame)) {
        throw FrameMismatch("semantic frame " + std::to_string(semantic.frame.width) + "x" +
                            std::to_string(semantic.frame.height) + " vs instance frame " +
                            std::to_string(instance.frame.width) + "x" +
                            std::to_string(instance.frame.height));
    }
    const ImageFrame& frame = semantic.frame;

    std::vector<detail::PoolEntry> sem_pool = detail::build_pool(vertical_sort(semantic), true);
    std::vector<detail::PoolEntry> ins_pool = detail::build_pool(vertical_sort(instance), false);

    EnsembleOutcome outcome;
    outcome.ensembled.frame = frame;
    std::vector<detail::EnsembleEntry> accepted;

    // Stage A: agreement. One-to-one, first match in vertical order wins.
    for (auto& su : sem_pool) {
        for (auto& im : ins_pool) {
            if (im.consumed) continue;
            const double d = detail::delta(su.mask, su.area, im.mask, im.area);
            if (!cfg.exceeds(d)) continue;
            detail::EnsembleEntry e;
            e.contour = union_contour(su.contour, im.contour, frame);
            e.mask = rasterize(e.contour, frame);
            e.area = e.mask.area();
            e.provenance = {EnsembleRule::Agreement, su.sorted_index, im.sorted_index};
            accepted.push_back(std::move(e));
            su.consumed = true;
            im.consumed = true;
            break;
        }
    }

    // Stage B: overlap resolution. A leftover semantic blob that covers most
    // of an instance mask surrenders to it; the blob stays in its pool so it
    // can resolve against several instance masks.
    for (auto& su : sem_pool) {
        if (su.consumed) continue;
        for (auto& im : ins_pool) {
            if (im.consumed) continue;
            const double d = detail::delta(su.mask, su.area, im.mask, im.area);
            if (cfg.exceeds(d)) continue;
            const double dm = static_cast<double>(MaskGrid::intersect_count(su.mask, im.mask)) /
                              static_cast<double>(im.area);
            if (!cfg.exceeds(dm)) continue;
            detail::EnsembleEntry e;
            e.contour = im.contour;
            e.contour.source = Source::Ensemble;
            e.contour.label.reset();
            e.contour.score.reset();
            e.mask = im.mask;
            e.area = im.area;
            e.provenance = {EnsembleRule::OverlapResolution, std::nullopt, im.sorted_index};
            accepted.push_back(std::move(e));
            im.consumed = true;
        }
    }

    // Stage C: pickup. Mean and deviation are frozen here, before any pickup.
    std::vector<std::int64_t> areas;
    for (const auto& e : accepted) areas.push_back(e.area);
    const EnsembleStats pre = detail::area_stats(areas);

    std::vector<detail::PoolEntry*> leftovers;
    for (auto& e : sem_pool) {
        if (!e.consumed) leftovers.push_back(&e);
    }
    for (auto& e : ins_pool) {
        if (!e.consumed) leftovers.push_back(&e);
    }

    auto overlaps_accepted = [&](const detail::PoolEntry& cand, std::string& detail_out) {
        for (const auto& acc : accepted) {
            const double d = detail::delta(cand.mask, cand.area, acc.mask, acc.area);
            if (cfg.exceeds(d)) {
                detail_out = "delta " + std::to_string(d) + " against an ensembled mask";
                return true;
            }
        }
        return false;
    };

    auto pickup = [&](detail::PoolEntry& cand) {
        detail::EnsembleEntry e;
        e.contour = cand.contour;
        e.contour.source = Source::Ensemble;
        e.contour.label.reset();
        e.contour.score.reset();
        e.mask = cand.mask;
        e.area = cand.area;
        if (cand.is_semantic) {
            e.provenance = {EnsembleRule::Pickup, cand.sorted_index, std::nullopt};
        } else {
            e.provenance = {EnsembleRule::Pickup, std::nullopt, cand.sorted_index};
        }
        accepted.push_back(std::move(e));
        cand.consumed = true;
    };

    if (accepted.empty()) {
        // Bootstrap: one provider may have failed outright. Keep every
        // leftover that does not duplicate an already kept one, larger
        // areas first.
        std::sort(leftovers.begin(), leftovers.end(),
                  [](const detail::PoolEntry* a, const detail::PoolEntry* b) {
                      if (a->area != b->area) return a->area > b->area;
                      return a->sorted_index < b->sorted_index;
                  });
        for (detail::PoolEntry* cand : leftovers) {
            std::string why;
            if (overlaps_accepted(*cand, why)) {
                outcome.rejected.push_back(
                    {cand->contour, RejectReason::OverlapsEnsembled, why});
                continue;
            }
            pickup(*cand);
        }
        if (!accepted.empty()) {
            outcome.warnings.push_back("ensemble bootstrapped from leftover contours only");
        }
    } else {
        double lo, hi;
        if (accepted.size() == 1) {
            lo = 0.5 * pre.mu;
            hi = 1.5 * pre.mu;
        } else {
            lo = pre.mu - cfg.lambda * pre.sigma;
            hi = pre.mu + cfg.lambda * pre.sigma;
        }
        // Leftovers from both pools, visited in vertical order.
        std::sort(leftovers.begin(), leftovers.end(),
                  [](const detail::PoolEntry* a, const detail::PoolEntry* b) {
                      if (int c = detail::VerticalKey::cmp_ratio(a->sums.sum_y, a->sums.count,
                                                                 b->sums.sum_y, b->sums.count)) {
                          return c < 0;
                      }
                      if (int c = detail::VerticalKey::cmp_ratio(a->sums.sum_x, a->sums.count,
                                                                 b->sums.sum_x, b->sums.count)) {
                          return c < 0;
                      }
                      return a->area < b->area;
                  });
        for (detail::PoolEntry* cand : leftovers) {
            const double a = static_cast<double>(cand->area);
            if (!(a > lo && a < hi)) {
                outcome.rejected.push_back(
                    {cand->contour, RejectReason::AreaOutsideInterval,
                     "area " + std::to_string(cand->area) + " outside (" + std::to_string(lo) +
                         ", " + std::to_string(hi) + ")"});
                continue;
            }
            std::string why;
            if (overlaps_accepted(*cand, why)) {
                outcome.rejected.push_back({cand->contour, RejectReason::OverlapsEnsembled, why});
                continue;
            }
            pickup(*cand, cand->contour.source == Source::SemanticProvider);
        }
    }

    // Final vertical order, keeping provenance aligned.
    std::vector<std::size_t> order(accepted.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t ia, std::size_t ib) {
        detail::VerticalKey ka{accepted[ia].mask.pixel_sums(), &accepted[ia].contour};
        detail::VerticalKey kb{accepted[ib].mask.pixel_sums(), &accepted[ib].contour};
        return ka < kb;
    });

    std::vector<std::int64_t> final_areas;
    for (std::size_t idx : order) {
        outcome.ensembled.contours.push_back(accepted[idx].contour);
        outcome.provenance.push_back(accepted[idx].provenance);
        final_areas.push_back(accepted[idx].area);
    }
    outcome.stats = detail::area_stats(final_areas);

    if (outcome.ensembled.empty()) {
        outcome.warnings.push_back("ensemble is empty after all stages");
    }
    return outcome;
}

} // namespace vertx
