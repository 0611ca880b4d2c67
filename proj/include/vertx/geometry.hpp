#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vertx/errors.hpp"
#include "vertx/log.hpp"
#include "vertx/vertebra_label.hpp"

namespace vertx {

// ---------------------------------------------------------------------------
// Core value types
// ---------------------------------------------------------------------------

/// The pixel lattice a set of contours lives on.
struct ImageFrame {
    int width = 0;
    int height = 0;
    std::string image_id;

    bool same_dimensions(const ImageFrame& other) const {
        return width == other.width && height == other.height;
    }
};

inline void validate_frame(const ImageFrame& frame) {
    if (frame.width < 1 || frame.height < 1) {
        throw InvalidConfig("frame dimensions must be positive, got " +
                            std::to_string(frame.width) + "x" + std::to_string(frame.height));
    }
}

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }
};

enum class Source : std::uint8_t { SemanticProvider, InstanceProvider, Ensemble, GroundTruth };

/// A closed polygon in pixel coordinates; the final vertex connects back to
/// the first. Optionally carries a class label and a confidence score.
struct Contour {
    std::vector<Point> points;
    std::optional<VertebraLabel> label;
    std::optional<double> score;
    Source source = Source::GroundTruth;

    friend bool operator==(const Contour& a, const Contour& b) {
        return a.points == b.points && a.label == b.label && a.score == b.score &&
               a.source == b.source;
    }
};

inline bool same_geometry(const Contour& a, const Contour& b) { return a.points == b.points; }

inline void validate_contour(const Contour& c) {
    if (c.points.size() < 3) {
        throw DegenerateContour("contour needs at least 3 vertices, got " +
                                std::to_string(c.points.size()));
    }
    for (const Point& p : c.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw DegenerateContour("contour has non-finite coordinates");
        }
    }
    if (c.score && (*c.score < 0.0 || *c.score > 1.0)) {
        throw InvalidConfig("contour score outside [0,1]");
    }
}

/// Clamp every vertex into [0, width] x [0, height].
inline Contour clamp_to_frame(Contour c, const ImageFrame& frame) {
    for (Point& p : c.points) {
        p.x = std::clamp(p.x, 0.0, static_cast<double>(frame.width));
        p.y = std::clamp(p.y, 0.0, static_cast<double>(frame.height));
    }
    return c;
}

struct ContourSet {
    ImageFrame frame;
    std::vector<Contour> contours;

    bool empty() const { return contours.empty(); }
    std::size_t size() const { return contours.size(); }
};

// ---------------------------------------------------------------------------
// MaskGrid: rasterized binary occupancy on the image lattice
// ---------------------------------------------------------------------------

class MaskGrid {
public:
    MaskGrid() = default;

    explicit MaskGrid(ImageFrame frame) : frame_(std::move(frame)) {
        validate_frame(frame_);
        const std::size_t bits =
            static_cast<std::size_t>(frame_.width) * static_cast<std::size_t>(frame_.height);
        words_.assign((bits + 63) / 64, 0);
    }

    const ImageFrame& frame() const { return frame_; }
    int width() const { return frame_.width; }
    int height() const { return frame_.height; }

    bool test(int x, int y) const {
        const std::size_t i = bit_index(x, y);
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    void set(int x, int y) {
        const std::size_t i = bit_index(x, y);
        words_[i >> 6] |= std::uint64_t{1} << (i & 63);
    }

    void reset(int x, int y) {
        const std::size_t i = bit_index(x, y);
        words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
    }

    /// Set pixels [x0, x1) in row y.
    void set_row_range(int y, int x0, int x1) {
        if (x0 >= x1) return;
        std::size_t b = bit_index(x0, y);
        std::size_t e = bit_index(x1 - 1, y) + 1;
        std::size_t wb = b >> 6, we = (e - 1) >> 6;
        if (wb == we) {
            words_[wb] |= mask_from(b & 63) & mask_upto(((e - 1) & 63) + 1);
            return;
        }
        words_[wb] |= mask_from(b & 63);
        for (std::size_t w = wb + 1; w < we; ++w) words_[w] = ~std::uint64_t{0};
        words_[we] |= mask_upto(((e - 1) & 63) + 1);
    }

    std::int64_t area() const {
        std::int64_t n = 0;
        for (std::uint64_t w : words_) n += std::popcount(w);
        return n;
    }

    bool empty() const {
        for (std::uint64_t w : words_) {
            if (w != 0) return false;
        }
        return true;
    }

    MaskGrid& operator|=(const MaskGrid& other) {
        require_same_frame(other);
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
        return *this;
    }

    MaskGrid& operator&=(const MaskGrid& other) {
        require_same_frame(other);
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
        return *this;
    }

    friend MaskGrid operator|(MaskGrid a, const MaskGrid& b) { return a |= b; }
    friend MaskGrid operator&(MaskGrid a, const MaskGrid& b) { return a &= b; }

    friend bool operator==(const MaskGrid& a, const MaskGrid& b) {
        return a.frame_.same_dimensions(b.frame_) && a.words_ == b.words_;
    }

    /// popcount(a AND b) without materializing the intersection grid.
    static std::int64_t intersect_count(const MaskGrid& a, const MaskGrid& b) {
        a.require_same_frame(b);
        std::int64_t n = 0;
        for (std::size_t i = 0; i < a.words_.size(); ++i) {
            n += std::popcount(a.words_[i] & b.words_[i]);
        }
        return n;
    }

    static std::int64_t union_count(const MaskGrid& a, const MaskGrid& b) {
        a.require_same_frame(b);
        std::int64_t n = 0;
        for (std::size_t i = 0; i < a.words_.size(); ++i) {
            n += std::popcount(a.words_[i] | b.words_[i]);
        }
        return n;
    }

    /// Integer sums of set-pixel coordinates; (0,0,0) for an empty mask.
    struct PixelSums {
        std::int64_t count = 0;
        std::int64_t sum_x = 0;
        std::int64_t sum_y = 0;
    };

    PixelSums pixel_sums() const {
        PixelSums s;
        const int w = frame_.width;
        for (std::size_t wi = 0; wi < words_.size(); ++wi) {
            std::uint64_t word = words_[wi];
            while (word) {
                const int b = std::countr_zero(word);
                word &= word - 1;
                const std::size_t bit = (wi << 6) + static_cast<std::size_t>(b);
                s.sum_x += static_cast<std::int64_t>(bit % static_cast<std::size_t>(w));
                s.sum_y += static_cast<std::int64_t>(bit / static_cast<std::size_t>(w));
                ++s.count;
            }
        }
        return s;
    }

    void require_same_frame(const MaskGrid& other) const {
        if (!frame_.same_dimensions(other.frame_)) {
            throw FrameMismatch("mask frames differ: " + std::to_string(frame_.width) + "x" +
                                std::to_string(frame_.height) + " vs " +
                                std::to_string(other.frame_.width) + "x" +
                                std::to_string(other.frame_.height));
        }
    }

private:
    std::size_t bit_index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(frame_.width) +
               static_cast<std::size_t>(x);
    }

    static std::uint64_t mask_from(std::size_t b) { return ~std::uint64_t{0} << b; }
    static std::uint64_t mask_upto(std::size_t b) {
        return b >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << b) - 1);
    }

    ImageFrame frame_;
    std::vector<std::uint64_t> words_;
};

// ---------------------------------------------------------------------------
// Rasterization
// ---------------------------------------------------------------------------

/// Scanline fill under the even-odd rule: pixel (i,j) is set iff its center
/// (i+0.5, j+0.5) is inside the polygon. Crossings use the half-open vertex
/// rule, so the result is deterministic regardless of vertex order.
inline MaskGrid rasterize(const Contour& contour, const ImageFrame& frame) {
    validate_frame(frame);
    validate_contour(contour);
    MaskGrid grid(frame);

    const std::vector<Point>& pts = contour.points;
    const std::size_t n = pts.size();

    double min_y = pts[0].y, max_y = pts[0].y;
    for (const Point& p : pts) {
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const int j_begin = std::max(0, static_cast<int>(std::floor(min_y)) - 1);
    const int j_end = std::min(frame.height - 1, static_cast<int>(std::ceil(max_y)) + 1);

    std::vector<double> crossings;
    bool any = false;
    for (int j = j_begin; j <= j_end; ++j) {
        const double py = static_cast<double>(j) + 0.5;
        crossings.clear();
        for (std::size_t k = 0; k < n; ++k) {
            const Point& a = pts[k];
            const Point& b = pts[(k + 1) % n];
            if ((a.y > py) != (b.y > py)) {
                crossings.push_back(a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        if (crossings.empty()) continue;
        std::sort(crossings.begin(), crossings.end());

        // Pixel center px = i+0.5 is inside iff the parity of crossings
        // c <= px is odd (the crossing count per row is even, so this equals
        // the usual "odd number of crossings to the right" test).
        std::size_t k = 0;
        bool inside = false;
        int run_start = -1;
        for (int i = 0; i < frame.width; ++i) {
            const double px = static_cast<double>(i) + 0.5;
            while (k < crossings.size() && crossings[k] <= px) {
                inside = !inside;
                ++k;
            }
            if (inside) {
                if (run_start < 0) run_start = i;
            } else if (run_start >= 0) {
                grid.set_row_range(j, run_start, i);
                any = true;
                run_start = -1;
            }
            if (k == crossings.size() && run_start < 0) break;
        }
        if (run_start >= 0) {
            grid.set_row_range(j, run_start, frame.width);
            any = true;
        }
    }

    if (!any) {
        throw DegenerateContour("contour rasterizes to zero pixels");
    }
    return grid;
}

/// Pixel count of a mask.
inline std::int64_t area(const MaskGrid& mask) { return mask.area(); }

/// Pixel count of the overlap of two masks on the same frame.
inline std::int64_t intersection_area(const MaskGrid& a, const MaskGrid& b) {
    return MaskGrid::intersect_count(a, b);
}

// ---------------------------------------------------------------------------
// Bounding box / centroid
// ---------------------------------------------------------------------------

struct BoundingBox {
    int min_x = 0;
    int min_y = 0;
    int max_x = 0;
    int max_y = 0;

    friend bool operator==(const BoundingBox& a, const BoundingBox& b) {
        return a.min_x == b.min_x && a.min_y == b.min_y && a.max_x == b.max_x && a.max_y == b.max_y;
    }
};

/// Tight bounds over set pixels. Throws EmptyMask on an empty grid.
inline BoundingBox bounding_box(const MaskGrid& mask) {
    BoundingBox box{mask.width(), mask.height(), -1, -1};
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.test(x, y)) continue;
            box.min_x = std::min(box.min_x, x);
            box.min_y = std::min(box.min_y, y);
            box.max_x = std::max(box.max_x, x);
            box.max_y = std::max(box.max_y, y);
        }
    }
    if (box.max_x < 0) throw EmptyMask("bounding_box of empty mask");
    return box;
}

/// Mean of set-pixel coordinates.
inline std::pair<double, double> centroid(const MaskGrid& mask) {
    const MaskGrid::PixelSums s = mask.pixel_sums();
    if (s.count == 0) throw EmptyMask("centroid of empty mask");
    return {static_cast<double>(s.sum_x) / static_cast<double>(s.count),
            static_cast<double>(s.sum_y) / static_cast<double>(s.count)};
}

// ---------------------------------------------------------------------------
// Connected components, hole filling and boundary tracing
// ---------------------------------------------------------------------------

namespace detail {

/// Largest 4-connected component of the set pixels. Ties go to the component
/// encountered first in row-major order. Returns the number of components.
inline std::size_t largest_component(const MaskGrid& in, MaskGrid& out) {
    const int w = in.width(), h = in.height();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
    std::size_t n_components = 0;
    std::int64_t best_area = 0;
    std::vector<std::pair<int, int>> best_pixels, pixels;
    std::deque<std::pair<int, int>> queue;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!in.test(x, y) || seen[static_cast<std::size_t>(y) * w + x]) continue;
            ++n_components;
            pixels.clear();
            queue.clear();
            queue.emplace_back(x, y);
            seen[static_cast<std::size_t>(y) * w + x] = 1;
            while (!queue.empty()) {
                auto [cx, cy] = queue.front();
                queue.pop_front();
                pixels.emplace_back(cx, cy);
                constexpr int dx[4] = {1, -1, 0, 0};
                constexpr int dy[4] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    const int nx = cx + dx[d], ny = cy + dy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (!in.test(nx, ny)) continue;
                    std::uint8_t& s = seen[static_cast<std::size_t>(ny) * w + nx];
                    if (s) continue;
                    s = 1;
                    queue.emplace_back(nx, ny);
                }
            }
            if (static_cast<std::int64_t>(pixels.size()) > best_area) {
                best_area = static_cast<std::int64_t>(pixels.size());
                best_pixels = pixels;
            }
        }
    }

    out = MaskGrid(in.frame());
    for (auto [px, py] : best_pixels) out.set(px, py);
    return n_components;
}

/// Fill interior holes: unset pixels not 8-connected to the outside of the
/// component's bounding box become set.
inline void fill_holes(MaskGrid& grid) {
    BoundingBox box;
    try {
        box = bounding_box(grid);
    } catch (const EmptyMask&) {
        return;
    }
    const int x0 = std::max(0, box.min_x - 1), y0 = std::max(0, box.min_y - 1);
    const int x1 = std::min(grid.width() - 1, box.max_x + 1);
    const int y1 = std::min(grid.height() - 1, box.max_y + 1);
    const int bw = x1 - x0 + 1, bh = y1 - y0 + 1;

    std::vector<std::uint8_t> outside(static_cast<std::size_t>(bw) * bh, 0);
    std::deque<std::pair<int, int>> queue;
    auto push = [&](int x, int y) {
        if (x < x0 || y < y0 || x > x1 || y > y1) return;
        if (grid.test(x, y)) return;
        std::uint8_t& s = outside[static_cast<std::size_t>(y - y0) * bw + (x - x0)];
        if (s) return;
        s = 1;
        queue.emplace_back(x, y);
    };
    for (int x = x0; x <= x1; ++x) {
        push(x, y0);
        push(x, y1);
    }
    for (int y = y0; y <= y1; ++y) {
        push(x0, y);
        push(x1, y);
    }
    while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                push(cx + dx, cy + dy);
            }
        }
    }
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (!grid.test(x, y) && !outside[static_cast<std::size_t>(y - y0) * bw + (x - x0)]) {
                grid.set(x, y);
            }
        }
    }
}

/// Trace the outer boundary of a hole-free 4-connected region along pixel
/// cracks. Returns lattice-corner vertices; rasterizing the polygon with the
/// pixel-center even-odd rule reproduces the region exactly, because every
/// crossing lands on an integer x while pixel centers sit at half-integers.
inline std::vector<Point> trace_boundary(const MaskGrid& grid) {
    const int w = grid.width(), h = grid.height();
    int sx = -1, sy = -1;
    for (int y = 0; y < h && sx < 0; ++y) {
        for (int x = 0; x < w; ++x) {
            if (grid.test(x, y)) {
                sx = x;
                sy = y;
                break;
            }
        }
    }
    if (sx < 0) throw EmptyMask("trace_boundary of empty mask");

    auto at = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < w && y < h && grid.test(x, y);
    };

    // Directions: 0=E, 1=S, 2=W, 3=N (y grows downward). The region is kept
    // on the walker's right; at a checkerboard corner we turn right, which
    // keeps diagonal neighbours disconnected, matching 4-connectivity.
    constexpr int dx[4] = {1, 0, -1, 0};
    constexpr int dy[4] = {0, 1, 0, -1};
    auto front_right = [&](int cx, int cy, int dir) {
        switch (dir) {
            case 0: return at(cx, cy);
            case 1: return at(cx - 1, cy);
            case 2: return at(cx - 1, cy - 1);
            default: return at(cx, cy - 1);
        }
    };
    auto front_left = [&](int cx, int cy, int dir) {
        switch (dir) {
            case 0: return at(cx, cy - 1);
            case 1: return at(cx, cy);
            case 2: return at(cx - 1, cy);
            default: return at(cx - 1, cy - 1);
        }
    };

    std::vector<std::pair<int, int>> corners;
    int cx = sx, cy = sy, dir = 0;  // first move is east along the top crack
    const std::size_t max_steps = static_cast<std::size_t>(w + 2) * (h + 2) * 4;
    std::size_t steps = 0;
    do {
        corners.emplace_back(cx, cy);
        cx += dx[dir];
        cy += dy[dir];
        if (front_right(cx, cy, dir)) {
            if (front_left(cx, cy, dir)) dir = (dir + 3) % 4;  // left turn
        } else {
            dir = (dir + 1) % 4;  // right turn
        }
        if (++steps > max_steps) throw Error("boundary trace failed to close");
    } while (!(cx == sx && cy == sy && dir == 0));

    // Collapse collinear runs; only direction changes become vertices.
    std::vector<Point> verts;
    const std::size_t m = corners.size();
    for (std::size_t i = 0; i < m; ++i) {
        const auto& prev = corners[(i + m - 1) % m];
        const auto& cur = corners[i];
        const auto& next = corners[(i + 1) % m];
        const int in_dx = cur.first - prev.first, in_dy = cur.second - prev.second;
        const int out_dx = next.first - cur.first, out_dy = next.second - cur.second;
        if (in_dx != out_dx || in_dy != out_dy) {
            verts.push_back(Point{static_cast<double>(cur.first), static_cast<double>(cur.second)});
        }
    }
    return verts;
}

} // namespace detail

/// Union of two contours as a single polygon: OR the rasterized masks, keep
/// the largest 4-connected component (with a warning if the union came out
/// disconnected), fill interior holes, and trace the outer boundary.
inline Contour union_contour(const Contour& a, const Contour& b, const ImageFrame& frame) {
    MaskGrid ga = rasterize(a, frame);
    MaskGrid gb = rasterize(b, frame);
    ga |= gb;

    MaskGrid component;
    const std::size_t n = detail::largest_component(ga, component);
    if (n > 1) {
        log::warn("union of contours is disconnected (" + std::to_string(n) +
                  " components); keeping the largest");
    }
    detail::fill_holes(component);

    Contour out;
    out.points = detail::trace_boundary(component);
    out.source = Source::Ensemble;
    return out;
}

// ---------------------------------------------------------------------------
// Vertical ordering
// ---------------------------------------------------------------------------

namespace detail {

/// Sort key: centroid y, then centroid x, then area, then vertex list.
/// Centroid comparisons are exact (integer cross-multiplication).
struct VerticalKey {
    MaskGrid::PixelSums sums;
    const Contour* contour = nullptr;

    static int cmp_ratio(std::int64_t num_a, std::int64_t den_a, std::int64_t num_b,
                         std::int64_t den_b) {
        const __int128 lhs = static_cast<__int128>(num_a) * den_b;
        const __int128 rhs = static_cast<__int128>(num_b) * den_a;
        return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
    }

    bool operator<(const VerticalKey& o) const {
        if (int c = cmp_ratio(sums.sum_y, sums.count, o.sums.sum_y, o.sums.count)) return c < 0;
        if (int c = cmp_ratio(sums.sum_x, sums.count, o.sums.sum_x, o.sums.count)) return c < 0;
        if (sums.count != o.sums.count) return sums.count < o.sums.count;
        const auto& pa = contour->points;
        const auto& pb = o.contour->points;
        return std::lexicographical_compare(
            pa.begin(), pa.end(), pb.begin(), pb.end(), [](const Point& x, const Point& y) {
                return x.y != y.y ? x.y < y.y : x.x < y.x;
            });
    }
};

} // namespace detail

/// Contours ordered by ascending mask-centroid y (image top first), ties by
/// centroid x, then area. The output is a permutation of the input.
inline ContourSet vertical_sort(const ContourSet& set) {
    std::vector<detail::VerticalKey> keys;
    keys.reserve(set.contours.size());
    for (const Contour& c : set.contours) {
        detail::VerticalKey key;
        key.sums = rasterize(c, set.frame).pixel_sums();
        key.contour = &c;
        keys.push_back(key);
    }
    std::sort(keys.begin(), keys.end());

    ContourSet out;
    out.frame = set.frame;
    out.contours.reserve(keys.size());
    for (const auto& k : keys) out.contours.push_back(*k.contour);
    return out;
}

} // namespace vertx
