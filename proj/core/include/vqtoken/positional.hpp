#pragma once

#include <cstdint>

#include "vqtoken/grid.hpp"
#include "vqtoken/matrix.hpp"

namespace vqtoken {

/// Fixed (non-learned) sinusoidal positional encodings over the (f, h, w)
/// grid, one D-dimensional row per cell in linear-index order.
///
/// Channel layout: floor(D/3) channels each for h and w (sin/cos pairs at
/// integer frequencies 1, 2, ... cycles per H resp. W), and the remaining
/// channels form the temporal block. The temporal block cycles through five
/// phase families: pure f, and the traveling phases (w - f), (w + f),
/// (h - f), (h + f) at one cycle per W resp. H. A traveling channel is
/// phase-constant along a trajectory moving at the matched unit velocity
/// (exactly so under toroidal wrap, since the phase period equals the grid
/// extent), and smears out otherwise, so mean-pooling over a cluster's cells
/// keeps motion direction observable.
Matrix pe_table(const GridDims& dims, std::uint32_t dim);

/// Standard 1-D transformer encoding over sequence slots 0..count-1:
/// channel pair 2i uses wavelength 10000^(2i/D).
Matrix pe_sequence(std::size_t count, std::uint32_t dim);

}  // namespace vqtoken
