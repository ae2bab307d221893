#pragma once

#include <random>
#include <utility>
#include <vector>

#include "deepindex/sparse.hpp"
#include "deepindex/tensor.hpp"

namespace deepindex::ops {

// Every primitive computes its forward result eagerly and, when any input
// requires a gradient, records the matching backward closure on the tape.

TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b);
// rows of x against dense w (dim x cols); only w receives gradient.
TensorPtr sparse_matmul(Tape& tape, const SparseMatrix& x, const TensorPtr& w);

TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b);
// x (n x m) plus bias (m) broadcast over rows.
TensorPtr add_bias(Tape& tape, const TensorPtr& x, const TensorPtr& bias);

TensorPtr relu(Tape& tape, const TensorPtr& x);
TensorPtr sigmoid(Tape& tape, const TensorPtr& x);
TensorPtr tanh_act(Tape& tape, const TensorPtr& x);
TensorPtr softmax_rows(Tape& tape, const TensorPtr& x);

TensorPtr concat_cols(Tape& tape, const std::vector<TensorPtr>& xs);
TensorPtr concat_rows(Tape& tape, const std::vector<TensorPtr>& xs);
TensorPtr slice_rows(Tape& tape, const TensorPtr& x, int begin, int count);
TensorPtr transpose(Tape& tape, const TensorPtr& x);

TensorPtr sum_all(Tape& tape, const TensorPtr& x);
TensorPtr mean_all(Tape& tape, const TensorPtr& x);

// Inverted dropout: kept entries are scaled by 1/keep_p at train time so that
// eval mode is the identity.
TensorPtr dropout(Tape& tape, const TensorPtr& x, double keep_p, bool train, std::mt19937_64& rng);

// Normalizes over the batch dimension of x (n x f). In train mode the batch
// statistics are used and running_mean/running_var are updated in place
// (running = momentum*running + (1-momentum)*batch); in eval mode the running
// statistics are used. Train mode requires n >= 2.
TensorPtr batchnorm1d(Tape& tape, const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                      const TensorPtr& running_mean, const TensorPtr& running_var, double momentum,
                      bool train, double eps = 1e-5);

// Gathers rows of table (V x d) for each id. id < 0 denotes the reserved pad
// position: a zero row that never receives gradient.
TensorPtr embedding_lookup(Tape& tape, const TensorPtr& table, const std::vector<int>& ids);

// Valid (no padding) cross-correlation over the time axis.
// seq: T x d, filters: {w, d, f}, bias: f  ->  (T-w+1) x f. Requires T >= w.
TensorPtr conv1d(Tape& tape, const TensorPtr& seq, const TensorPtr& filters, const TensorPtr& bias);

// Splits the time axis of x (T' x f) into p contiguous chunks whose sizes
// differ by at most one (earlier chunks larger) and max-pools each chunk.
// p == 1 is global max pooling. Gradient goes to the first argmax on ties.
TensorPtr chunked_maxpool(Tape& tape, const TensorPtr& x, int p);

TensorPtr flatten_to_row(Tape& tape, const TensorPtr& x);

// Summed binary cross-entropy over all cells, computed from logits in the
// fused stable form max(z,0) - z*y + log(1+exp(-|z|)).
TensorPtr bce_with_logits_sum(Tape& tape, const TensorPtr& logits, const TensorPtr& targets);
// Same loss from probabilities, clamped to [1e-7, 1-1e-7].
TensorPtr bce_sum(Tape& tape, const TensorPtr& probs, const TensorPtr& targets);

struct LstmWeights {
    // Gate order along the 4h axis: input, forget, candidate, output.
    TensorPtr w_x;   // d x 4h
    TensorPtr w_h;   // h x 4h
    TensorPtr bias;  // 4h
    // Optional peephole weights (h each); all three present or all absent.
    TensorPtr p_i, p_f, p_o;
    int hidden = 0;

    bool has_peepholes() const { return p_i != nullptr; }
};

// One cell step: returns (h_t, c_t) for inputs x_t (n x d), h_prev, c_prev (n x h).
std::pair<TensorPtr, TensorPtr> lstm_cell(Tape& tape, const TensorPtr& x, const TensorPtr& h_prev,
                                          const TensorPtr& c_prev, const LstmWeights& w);

}  // namespace deepindex::ops
