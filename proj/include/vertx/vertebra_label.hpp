#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "vertx/errors.hpp"

namespace vertx {

/// Anatomical vertebra names, totally ordered head to tail:
/// C2 < C3 < ... < C7 < T1 < ... < T12 < L1 < ... < L5 < S1.
enum class VertebraLabel : std::uint8_t {
    C2, C3, C4, C5, C6, C7,
    T1, T2, T3, T4, T5, T6, T7, T8, T9, T10, T11, T12,
    L1, L2, L3, L4, L5,
    S1,
};

inline constexpr std::size_t kLabelCount = 24;

inline constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "C2", "C3", "C4", "C5", "C6", "C7",
    "T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9", "T10", "T11", "T12",
    "L1", "L2", "L3", "L4", "L5",
    "S1",
};

inline constexpr std::size_t label_index(VertebraLabel l) {
    return static_cast<std::size_t>(l);
}

inline std::string to_string(VertebraLabel l) {
    return std::string(kLabelNames[label_index(l)]);
}

inline std::optional<VertebraLabel> label_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kLabelCount; ++i) {
        if (kLabelNames[i] == name) return static_cast<VertebraLabel>(i);
    }
    return std::nullopt;
}

/// Next label down the spine (C2 -> C3, T12 -> L1, ...). Empty past S1.
inline std::optional<VertebraLabel> successor(VertebraLabel l) {
    std::size_t i = label_index(l);
    if (i + 1 >= kLabelCount) return std::nullopt;
    return static_cast<VertebraLabel>(i + 1);
}

/// Next label up the spine (S1 -> L5, L1 -> T12, ...). Empty above C2.
inline std::optional<VertebraLabel> predecessor(VertebraLabel l) {
    std::size_t i = label_index(l);
    if (i == 0) return std::nullopt;
    return static_cast<VertebraLabel>(i - 1);
}

// T2..T10 sit between the two zip ranges that lateral films normally cover
// (C2..T1 from the top, T11..S1 from the bottom); labels assigned there are
// reported as extrapolated.
inline constexpr bool is_extrapolated(VertebraLabel l) {
    return label_index(l) > label_index(VertebraLabel::T1) &&
           label_index(l) < label_index(VertebraLabel::T11);
}

inline constexpr bool operator<(VertebraLabel a, VertebraLabel b) {
    return label_index(a) < label_index(b);
}

} // namespace vertx
