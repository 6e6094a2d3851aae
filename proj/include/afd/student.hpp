#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "afd/autodiff.hpp"
#include "afd/flowpath.hpp"
#include "afd/params.hpp"
#include "afd/rng.hpp"
#include "afd/tensor.hpp"

namespace afd {

// Prompt: an index into a finite registered prompt set. Embeddings are
// learned per model (student and discriminator each own a table).
struct Prompt {
    int id = 0;
};

enum class Source { teacher, student };

// A prompt-conditioned sequence of K clean blocks of dimension d.
struct Video {
    std::vector<Tensor> blocks;
    int prompt_id = 0;
    Source source = Source::student;

    int K() const { return static_cast<int>(blocks.size()); }
    int d() const { return blocks.empty() ? 0 : blocks[0].rows; }
    Tensor flatten() const;
    bool all_finite() const;
};

struct StudentGeometry {
    int K = 8;
    int d = 2;
    int n_prompts = 8;
    int enc_dim = 16;
    int temb_dim = 16;
    int prompt_dim = 8;
    std::vector<int> hidden = {128, 128, 128};

    int history_dim() const { return 2 * enc_dim; }
    int input_dim() const { return d + temb_dim + history_dim() + prompt_dim; }
    bool operator==(const StudentGeometry&) const = default;
};

// Sinusoidal features of t, width geometry.temb_dim.
Tensor t_embedding(double t, int temb_dim);

// Parameter leaves for one model on one tape; create once per tape.
struct FieldBinding {
    Tape* tape = nullptr;
    const ParamStore* store = nullptr;
    std::unordered_map<std::string, Value> p;

    Value at(const std::string& name) const { return p.at(name); }
};

// Causal AR velocity field f(x_t, t, h_k, y): an MLP over the concatenation
// of the noised block, the t-embedding, a history summary, and the prompt
// embedding. The history summary is the mean of per-block affine encodings
// concatenated with the last block's encoding; empty history uses a learned
// start token.
class VelocityField {
public:
    VelocityField() = default;
    VelocityField(StudentGeometry geom, Rng& rng);

    const StudentGeometry& geometry() const { return geom_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    FieldBinding bind(Tape& tape) const;

    // Encoded block enc(b) = W_enc b + b_enc.
    Value encode_block(const FieldBinding& fb, Value block) const;

    // History summary from already-encoded prior blocks (in causal order).
    Value history_from_encodings(const FieldBinding& fb, const std::vector<Value>& encs) const;
    Value history_summary(const FieldBinding& fb, const std::vector<Tensor>& prior_blocks) const;
    Tensor history_summary(const std::vector<Tensor>& prior_blocks) const;

    Value eval(const FieldBinding& fb, Value x_t, double t, Value history, int prompt_id) const;
    Tensor eval(const Tensor& x_t, double t, const std::vector<Tensor>& history, int prompt_id) const;

    // One block by Euler integration under fixed conditioning.
    Value sample_block(const FieldBinding& fb, const std::vector<Tensor>& history, int prompt_id, int steps,
                       const Tensor& noise) const;

    // Blockwise autoregressive rollout; block k conditions on the summary of
    // blocks < k. Differentiable end to end when used with an external tape.
    std::vector<Value> rollout_on_tape(const FieldBinding& fb, Prompt prompt, int K, int steps, Rng& rng) const;
    Video rollout(Prompt prompt, int K, int steps, Rng& rng) const;

    VelocityField clone() const { return *this; }

private:
    void check_prompt(int prompt_id) const;

    StudentGeometry geom_;
    ParamStore params_;
};

Video rollout(const VelocityField& field, Prompt prompt, int K, int steps, Rng& rng);
Tensor sample_ode(const VelocityField& field, Prompt prompt, const std::vector<Tensor>& history, int steps, Rng& rng);

// One forward-noised training state with its conditioning context.
struct ConditionedState {
    NoisySample sample;
    std::vector<Tensor> history;  // clean blocks before this one
    int prompt_id = 0;
};

// One independent (t, eps) draw per block of an on-policy rollout.
std::vector<ConditionedState> noised_rollout_states(const Video& video, const Schedule& sched, Rng& rng);

// Per-block flow-matching regression item.
struct FmItem {
    Tensor x0;
    int prompt_id = 0;
    std::vector<Tensor> history;
};

// Mean over given noised states of |f(x_t) - v|^2; the deterministic core.
Value fm_loss_on_states(Tape& tape, const VelocityField& field, const FieldBinding& fb,
                        const std::vector<ConditionedState>& states);

// Draws one (t, eps) per item, then delegates to the deterministic core.
Value fm_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb, const std::vector<FmItem>& batch,
              const Schedule& sched, Rng& rng);
double fm_loss_value(const VelocityField& field, const std::vector<FmItem>& batch, const Schedule& sched, Rng& rng);

// Teacher-forced FM items from whole videos (history = video prefix).
std::vector<FmItem> fm_items_from_video(const Video& video);

}  // namespace afd
