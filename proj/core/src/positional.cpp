#include "vqtoken/positional.hpp"

#include <cmath>
#include <vector>

#include "vqtoken/errors.hpp"

namespace vqtoken {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

enum class Phase { kF, kH, kW, kWMinusF, kWPlusF, kHMinusF, kHPlusF };

struct ChannelSpec {
  Phase phase;
  double freq;   // cycles per period
  bool is_sin;   // sin or cos half of the pair
};

double phase_value(Phase phase, double f, double h, double w, const GridDims& dims) {
  switch (phase) {
    case Phase::kF: return f / dims.frames;
    case Phase::kH: return h / dims.height;
    case Phase::kW: return w / dims.width;
    case Phase::kWMinusF: return (w - f) / dims.width;
    case Phase::kWPlusF: return (w + f) / dims.width;
    case Phase::kHMinusF: return (h - f) / dims.height;
    case Phase::kHPlusF: return (h + f) / dims.height;
  }
  return 0.0;
}

void push_pairs(std::vector<ChannelSpec>& spec, Phase phase, double freq) {
  spec.push_back({phase, freq, true});
  spec.push_back({phase, freq, false});
}

std::vector<ChannelSpec> build_spec(std::uint32_t dim) {
  const std::uint32_t spatial = dim / 3;
  const std::uint32_t temporal = dim - 2 * spatial;

  std::vector<ChannelSpec> spec;
  spec.reserve(dim);
  for (std::uint32_t c = 0; c < spatial; ++c) {
    spec.push_back({Phase::kH, static_cast<double>(c / 2 + 1), c % 2 == 0});
  }
  for (std::uint32_t c = 0; c < spatial; ++c) {
    spec.push_back({Phase::kW, static_cast<double>(c / 2 + 1), c % 2 == 0});
  }

  // Temporal block: cycle pure-f and the four traveling families, raising
  // the frequency on each revisit.
  static const Phase kFamilies[] = {Phase::kF, Phase::kWMinusF, Phase::kWPlusF,
                                    Phase::kHMinusF, Phase::kHPlusF};
  std::vector<ChannelSpec> temporal_spec;
  int round = 0;
  while (temporal_spec.size() < temporal) {
    for (Phase family : kFamilies) {
      push_pairs(temporal_spec, family, static_cast<double>(round + 1));
      if (temporal_spec.size() >= temporal) break;
    }
    ++round;
  }
  temporal_spec.resize(temporal);
  spec.insert(spec.end(), temporal_spec.begin(), temporal_spec.end());
  return spec;
}

}  // namespace

Matrix pe_table(const GridDims& dims, std::uint32_t dim) {
  if (dims.cell_count() == 0 || dim == 0) {
    throw ContractError("pe_table: empty grid or zero dim");
  }
  const auto spec = build_spec(dim);
  Matrix table(dims.cell_count(), dim);
  for (std::uint32_t f = 0; f < dims.frames; ++f) {
    for (std::uint32_t h = 0; h < dims.height; ++h) {
      for (std::uint32_t w = 0; w < dims.width; ++w) {
        const std::size_t i = dims.linear_index(f, h, w);
        for (std::uint32_t c = 0; c < dim; ++c) {
          const ChannelSpec& ch = spec[c];
          const double theta =
              kTwoPi * ch.freq * phase_value(ch.phase, f, h, w, dims);
          table(i, c) = ch.is_sin ? std::sin(theta) : std::cos(theta);
        }
      }
    }
  }
  return table;
}

Matrix pe_sequence(std::size_t count, std::uint32_t dim) {
  if (count == 0 || dim == 0) throw ContractError("pe_sequence: empty");
  Matrix table(count, dim);
  for (std::size_t pos = 0; pos < count; ++pos) {
    for (std::uint32_t c = 0; c < dim; ++c) {
      const double exponent = static_cast<double>(2 * (c / 2)) / dim;
      const double theta = static_cast<double>(pos) / std::pow(10000.0, exponent);
      table(pos, c) = (c % 2 == 0) ? std::sin(theta) : std::cos(theta);
    }
  }
  return table;
}

}  // namespace vqtoken
