#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wm/image.hpp"

namespace wm {

/// Deterministic synthetic "photograph": layered gradients, fractal textures,
/// soft-edged objects and mild sensor noise. Always passes the codec's
/// corner-case filter (the generator re-seeds itself if a draw does not).
RgbImage synthetic_photo(uint64_t seed, int width = 512, int height = 512);

std::vector<RgbImage> synthetic_corpus(uint64_t seed, int count, int width = 512,
                                       int height = 512);

/// Writes count PNGs (photo_0000.png ...) into an existing directory.
void write_corpus_dir(const std::string& directory, uint64_t seed, int count, int width = 512,
                      int height = 512);

} // namespace wm
