#include "vqtoken/codebook.hpp"

#include <string>

#include "vqtoken/errors.hpp"
#include "vqtoken/flops.hpp"

namespace vqtoken {

Codebook build_codebook(const TokenGrid& grid, const ClusterAssignment& assignment) {
  grid.validate();
  validate_assignment(assignment, grid.token_count());

  Codebook book;
  book.centroids = Matrix(assignment.cluster_count, grid.dim);
  for (std::size_t k = 0; k < assignment.cluster_count; ++k) {
    const auto& members = assignment.member_sets[k];
    auto crow = book.centroids.row(k);
    for (std::uint32_t i : members) {
      const auto trow = grid.embeddings.row(i);
      for (std::size_t d = 0; d < crow.size(); ++d) crow[d] += trow[d];
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (double& v : crow) v *= inv;
    flops::add(members.size() * crow.size() + crow.size());
  }
  require_finite(book.centroids, "codebook");
  return book;
}

IndexMap build_index_map(const ClusterAssignment& assignment, const GridDims& dims) {
  if (assignment.assignments.size() != dims.cell_count()) {
    throw ContractError("index map: assignment length " +
                        std::to_string(assignment.assignments.size()) +
                        " != cell count " + std::to_string(dims.cell_count()));
  }
  validate_assignment(assignment, dims.cell_count());
  IndexMap map;
  map.dims = dims;
  map.cluster_count = static_cast<std::uint32_t>(assignment.cluster_count);
  map.ids = assignment.assignments;
  return map;
}

}  // namespace vqtoken
