#pragma once

#include <array>
#include <vector>

#include "visattn/model.hpp"
#include "visattn/scene.hpp"

namespace visattn {

/// Knobs of the scripted referee. Logit values are on the attention-logit
/// scale before any intervention.
struct RefereeParams {
  /// Probability that the subject heads peak on a decoy location.
  double misplace_prob = 0.3;
  /// Probability that the subject heads carry a broad distractor region.
  double distractor_prob = 0.2;

  /// Extra height of the subject/reference peak on top of the object.
  double peak_logit = 4.8;
  double peak_width = 0.5;
  /// Residual logit on every cell of the attended object.
  double object_logit = 16.0;
  /// Height of the misplaced peak; it sits off the object, on background.
  double decoy_logit = 20.0;
  /// Decoy centre = reference + decoy_shift * (reference - subject).
  double decoy_shift = 0.3;
  double distractor_logit = 17.8;
  /// Distractor centre = reference + distractor_shift * (reference - subject).
  double distractor_shift = 2.0;
  int distractor_radius = 3;
  /// Half-width of the uniform per-cell logit noise.
  double noise = 0.25;
  double text_logit = 2.0;
  /// Answer logit per grid cell of centroid separation.
  double answer_gain = 1.0;
};

enum class AttentionFault { none, misplaced, distractor };

/// Attention-weighted position of each head group's image attention.
struct PerceivedLayout {
  std::array<double, 3> subject{};    // row, col, depth
  std::array<double, 3> reference{};
};

/// Weights-free stand-in for a VLM. Even heads attend for the question's
/// subject, odd heads for its reference object. Image logits of the final
/// row are fixed maps (peak + object residual + noise, possibly faulty),
/// scaled per layer; answer logits come from the attention-weighted
/// centroids of the two head groups after the hook has run.
class RefereeModel final : public DecoderModel {
 public:
  RefereeModel(const ModelConfig& config, const SceneSpec& scene, bool reversed,
               std::vector<Relation> options, const RefereeParams& params = {});

  /// Fixture form: explicit P*P image-logit maps for both head groups.
  static RefereeModel from_maps(const ModelConfig& config, const SceneSpec& scene, bool reversed,
                                std::vector<Relation> options, std::vector<double> subject_map,
                                std::vector<double> reference_map,
                                const RefereeParams& params = {});

  /// Gaussian bump of height `sharpness` at (row, col). Throws
  /// ContractViolation when the peak lies outside the grid.
  static std::vector<double> peaked_map(std::uint32_t patch_side, double row, double col,
                                        double sharpness, double width);

  const ModelConfig& config() const noexcept override { return config_; }
  ForwardResult forward(const TokenSequence& seq, const ImageHook& hook,
                        const ForwardOptions& options = {}) const override;

  /// Centroids the answer is computed from, under `hook`.
  PerceivedLayout perceive(const ImageHook& hook) const;

  AttentionFault fault() const noexcept { return fault_; }
  const std::vector<double>& subject_map() const noexcept { return subject_map_; }
  const std::vector<double>& reference_map() const noexcept { return reference_map_; }
  /// Multiplier applied to both maps in `layer`.
  double layer_gain(std::size_t layer) const;
  /// Position (row, col, depth) of image cell k.
  std::array<double, 3> cell_position(std::size_t k) const;

  /// Score of `r` given perceived centroids (before softmax).
  double relation_score(Relation r, const PerceivedLayout& layout) const;

 private:
  RefereeModel(const ModelConfig& config, const SceneSpec& scene, bool reversed,
               std::vector<Relation> options, const RefereeParams& params, int);

  ModelConfig config_;
  SceneSpec scene_;
  bool reversed_;
  std::vector<Relation> options_;
  RefereeParams params_;
  AttentionFault fault_ = AttentionFault::none;
  std::vector<double> subject_map_;
  std::vector<double> reference_map_;
  std::vector<double> depth_;
};

}  // namespace visattn
