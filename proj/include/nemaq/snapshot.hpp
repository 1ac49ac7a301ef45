// Binary field snapshots.
//
// Layout: magic "QTF1"; u32 little-endian n1, n2, n3, ncomp; f64 little-endian
// box_length, time; then ncomp contiguous f64 little-endian arrays of
// n1*n2*n3 samples each, x varying fastest. A flow state stores eight
// components: the three velocity components followed by the five independent
// entries q11, q12, q13, q22, q23.

#pragma once

#include <cstdint>
#include <string>

#include "nemaq/dynamics.hpp"
#include "nemaq/spectral.hpp"

namespace nemaq {

struct SnapshotHeader {
    std::uint32_t n1 = 0;
    std::uint32_t n2 = 0;
    std::uint32_t n3 = 0;
    std::uint32_t ncomp = 0;
    double box_length = 0.0;
    double time = 0.0;
};

// Header of an existing snapshot file. Throws std::runtime_error on missing
// file, bad magic, or truncation.
SnapshotHeader peek_snapshot(const std::string& path);

// Writes the full state (velocity then Q components) at the grid's resolution.
void save_state(const std::string& path, const SpectralGrid& g, const SimState& s);

// Reads a state snapshot and validates that its dimensions and box length
// match the grid. Throws std::runtime_error on any mismatch or short read.
SimState load_state(const std::string& path, const SpectralGrid& g);

}  // namespace nemaq
