#pragma once

#include "mog/dense.hpp"
#include "mog/experts.hpp"
#include "mog/graph.hpp"

#include <array>
#include <span>
#include <vector>

namespace mog {

struct SpectralEmbedding {
  Matrix u;                       // n_local x p, orthonormal columns
  std::vector<double> eigenvalues; // the p smallest, ascending
};

/// Eigenvectors of a (normalized) Laplacian for its p smallest eigenvalues.
/// A zero Laplacian yields the first p identity columns.
SpectralEmbedding spectral_embed(const Matrix& laplacian, std::size_t p);

/// Squared projection distance p - tr(U1 U1^T U2 U2^T).
double proj_distance_sq(const Matrix& u1, const Matrix& u2);

/// Normalized Laplacian of a pruned candidate over the ego's local ordering.
/// Kept edges carry w_e (structural) or w_e * sigmoid(score) (modulated, the
/// differentiable path for the scorers).
Matrix candidate_laplacian(const Graph& g, const SparseCandidate& cand, bool score_modulated);

/// Closed-form ensemble: L_hat = sum_m (L_m - E_m * U_m U_m^T).
Matrix ensemble_laplacian(std::span<const Matrix> laplacians,
                          std::span<const SpectralEmbedding> embeddings,
                          std::span<const double> gate_weights);

/// The objective the closed form minimizes over orthonormal U:
/// sum_m tr(U^T L_m U) + sum_m E_m * d^2(U, U_m).
double ensemble_objective(const Matrix& u, std::span<const Matrix> laplacians,
                          std::span<const SpectralEmbedding> embeddings,
                          std::span<const double> gate_weights);

/// Per-node outcome of the mix: consensus weights read off L_hat at the
/// original ego edge positions, and the post-sparsified kept set.
struct MixResult {
  NodeId center = 0;
  std::vector<EdgeId> ego_edges; // canonical ids, aligned with a_hat/kept_final
  std::vector<double> a_hat;     // -L_hat at the original edge positions
  std::vector<char> kept_final;  // mask
  double s_node = 0.0;           // blended removal ratio
  std::size_t kept_count = 0;
};

/// Recovers A_hat on the original ego edge support and keeps the
/// max(1, floor(|E|*(1-s_node))) largest-|weight| edges; ties keep the lower
/// canonical id. s_node is the unweighted mean of the selected experts'
/// sparsity levels.
MixResult post_sparsify(const EgoGraph& ego, const Matrix& l_hat,
                        std::span<const double> selected_sparsities);

enum class ReassemblyRule { Union, Intersection, MeanThreshold };

const char* reassembly_rule_name(ReassemblyRule r);
ReassemblyRule reassembly_rule_from_name(const std::string& name);

struct ReassembleResult {
  std::vector<EdgeTriple> edges;              // merged weights
  std::vector<EdgeId> edge_ids;               // canonical id in the source graph
  std::vector<std::array<char, 2>> side_kept; // {ego(min end), ego(max end)} kept flags
  double achieved_sparsity = 0.0;             // removed fraction
};

/// Merges per-node kept sets into a global edge set. Union: kept by either
/// side. Intersection: kept by both. MeanThreshold: from the union set, keep
/// the round(sum_u deg_u*(1-s_u)/2) edges with the largest |merged weight|
/// (ties to lower canonical id), then re-add each otherwise isolated node's
/// best union edge. Merged weight is the mean of the keeping sides' a_hat.
ReassembleResult reassemble(const Graph& g, std::span<const MixResult> per_node,
                            ReassemblyRule rule);

} // namespace mog
