#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cycleguard/adam.hpp"
#include "cycleguard/checkpoint.hpp"
#include "cycleguard/cycle.hpp"
#include "cycleguard/error.hpp"
#include "cycleguard/loss.hpp"
#include "cycleguard/model.hpp"
#include "cycleguard/rng.hpp"
#include "cycleguard/tape.hpp"

namespace cycleguard {

// One stage of the weight-transfer schedule. For the first stage there is
// nothing to freeze, so the two epoch counts simply add up; later stages
// train only the freshly added layers for epochs_frozen, then unfreeze
// everything for epochs_finetune.
struct StagePlan {
    int stage = 1;
    int epochs_frozen = 0;
    int epochs_finetune = 0;
};

struct TrainPlan {
    std::vector<StagePlan> stages;
    std::int64_t batch_size = 256;
    std::int64_t windows_per_cycle = 64;
    std::int64_t window = 128;
    std::uint64_t seed = 0;
    AdamConfig adam;
    StandardOptions width;
    SigmaMode sigma_mode = SigmaMode::kMatrix;

    void validate() const {
        if (stages.empty()) throw ConfigError("train plan: at least one stage required");
        int prev = 0;
        for (const StagePlan& s : stages) {
            if (s.stage < 1 || s.stage > 4) throw ConfigError("train plan: stage must be in 1..4");
            if (s.stage <= prev) throw ConfigError("train plan: stages must be strictly increasing");
            if (s.epochs_frozen < 0 || s.epochs_finetune < 0 || s.epochs_frozen + s.epochs_finetune < 1)
                throw ConfigError("train plan: each stage needs at least one epoch");
            prev = s.stage;
        }
        if (batch_size < 1 || windows_per_cycle < 1 || window < 1)
            throw ConfigError("train plan: batch size, windows per cycle and window must be positive");
        if (batch_size % windows_per_cycle != 0)
            throw ConfigError("train plan: batch size must be a multiple of windows per cycle");
    }

    std::int64_t cycles_per_batch() const { return batch_size / windows_per_cycle; }
};

struct TrainLogRow {
    std::int64_t epoch = 0;  // global across stages
    int stage = 1;
    std::int64_t batch = 0;
    LossBreakdown loss;
    double lr = 0.0;
};

struct TrainResult {
    Autoencoder model;
    std::vector<TrainLogRow> log;
    CheckpointMeta meta;
};

namespace detail {

// Seed-stream tags; keep distinct so drawing order changes in one stream
// never shift another.
inline constexpr std::uint64_t kInitStream = 1000;
inline constexpr std::uint64_t kEpochStream = 2000;

inline std::int64_t data_feature_count(const std::vector<const DriveCycle*>& cycles) {
    std::int64_t f = cycles.front()->features();
    for (const DriveCycle* c : cycles)
        if (c->features() != f) throw DataError("training cycles disagree on feature count");
    return f;
}

}  // namespace detail

// Staged training loop. Deterministic end to end for a fixed (plan, data)
// pair: model init, cycle shuffling and window draws all run on seeds
// derived from plan.seed. Returns the final parameters plus one log row per
// batch. resume, when given, continues a checkpointed run: its stage must
// equal the first planned stage, the global epoch picks up where it left
// off, and all layers train from the start (the frozen phase is considered
// over once a checkpoint exists).
inline TrainResult train(const TrainPlan& plan, const std::vector<const DriveCycle*>& cycles,
                         const std::function<void(const TrainLogRow&)>& on_batch = nullptr,
                         const Autoencoder* resume = nullptr, const CheckpointMeta* resume_meta = nullptr) {
    plan.validate();
    if (cycles.empty()) throw DataError("train: no training cycles");
    for (const DriveCycle* c : cycles)
        if (!c->normalized) throw StateError("train: cycle '" + c->id + "' is not normalized");
    const std::int64_t per_batch = plan.cycles_per_batch();
    if (static_cast<std::int64_t>(cycles.size()) < per_batch)
        throw DataError("train: need at least " + std::to_string(per_batch) + " cycles per batch, have " +
                        std::to_string(cycles.size()));
    if ((resume == nullptr) != (resume_meta == nullptr))
        throw ConfigError("train: resume parameters and metadata must come together");
    if (resume && resume->arch.stage() != plan.stages.front().stage)
        throw ConfigError("train: resume checkpoint is stage " + std::to_string(resume->arch.stage()) +
                          " but the plan opens with stage " + std::to_string(plan.stages.front().stage));

    const ArchitectureSpec probe = ArchitectureSpec::standard(plan.stages.front().stage, plan.width);
    const std::int64_t model_width = probe.input_w;
    if (plan.window != probe.input_h)
        throw ConfigError("train: window " + std::to_string(plan.window) + " does not match the model input height " +
                          std::to_string(probe.input_h));
    const std::int64_t F = detail::data_feature_count(cycles);
    if (F > model_width)
        throw DataError("train: " + std::to_string(F) + " features exceed the model width " +
                        std::to_string(model_width));
    const LossOptions loss_opt{F, plan.sigma_mode};

    TrainResult result;
    std::int64_t global_epoch = resume_meta ? static_cast<std::int64_t>(resume_meta->epoch) : 0;
    bool have_model = false;

    for (std::size_t si = 0; si < plan.stages.size(); ++si) {
        const StagePlan& sp = plan.stages[si];
        Autoencoder fresh = build(sp.stage, derive_seed(plan.seed, detail::kInitStream + static_cast<std::uint64_t>(sp.stage)),
                                  plan.width);
        if (si == 0 && resume) {
            result.model = *resume;
            unfreeze_all(result.model);
        } else if (!have_model) {
            result.model = std::move(fresh);  // first stage trains everything
        } else {
            result.model = transfer_weights(result.model, std::move(fresh));
        }
        have_model = true;

        OptimizerState opt = init_optimizer(result.model, plan.adam);
        const bool skip_frozen_phase = (si == 0 && resume != nullptr);
        const int total_epochs = sp.epochs_frozen + sp.epochs_finetune;
        for (int e = 0; e < total_epochs; ++e) {
            const bool finetune = skip_frozen_phase || e >= sp.epochs_frozen;
            if (finetune) unfreeze_all(result.model);
            const double lr = lr_schedule(global_epoch, plan.adam);

            std::mt19937_64 rng = make_rng(
                derive_seed(plan.seed, detail::kEpochStream + static_cast<std::uint64_t>(global_epoch)));
            std::vector<std::size_t> order(cycles.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), rng);

            const std::int64_t n_batches = static_cast<std::int64_t>(cycles.size()) / per_batch;
            for (std::int64_t bi = 0; bi < n_batches; ++bi) {
                std::vector<const DriveCycle*> group;
                for (std::int64_t j = 0; j < per_batch; ++j)
                    group.push_back(cycles[order[static_cast<std::size_t>(bi * per_batch + j)]]);
                const Batch batch = assemble_batch(group, plan.window, plan.windows_per_cycle, rng);
                const Tensor input = batch.tensor(model_width);

                GradTape<double> tape;
                const TapeBindings bind = forward_on_tape(tape, result.model, input);
                LossBreakdown lb;
                const NodeId loss = tape.composite_loss(bind.input, bind.reconstruction, loss_opt, &lb);
                auto grad_map = tape.backward(loss);
                const auto grads = collect_gradients(result.model, bind, grad_map);
                adam_step(result.model, grads, opt, lr);

                TrainLogRow row{global_epoch, sp.stage, bi, lb, lr};
                if (on_batch) on_batch(row);
                result.log.push_back(row);
            }
            ++global_epoch;
        }
    }

    unfreeze_all(result.model);
    result.meta.epoch = static_cast<std::uint64_t>(global_epoch);
    result.meta.stage = static_cast<std::uint32_t>(plan.stages.back().stage);
    result.meta.seed = plan.seed;
    result.meta.lr = lr_schedule(global_epoch > 0 ? global_epoch - 1 : 0, plan.adam);
    return result;
}

}  // namespace cycleguard
