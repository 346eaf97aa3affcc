#include "metaml/errors.hpp"
#include "metaml/flowgraph/block.hpp"
#include "metaml/flowgraph/external.hpp"
#include "metaml/kblocks/control.hpp"
#include "metaml/oblocks/search.hpp"
#include "metaml/surrogate/blocks.hpp"

namespace metaml {

namespace {

namespace bn = block_names;

const surrogate::Backend& need_backend(const BlockContext& ctx) {
  if (!ctx.backend) throw BackendError(ctx.actor.instance + ": no evaluation backend attached");
  return *ctx.backend;
}

const ControlRegistry& need_controls(const BlockContext& ctx) {
  if (!ctx.controls) throw UnknownControl(ctx.actor.instance + ": no control registry attached");
  return *ctx.controls;
}

MetaModel single(std::vector<MetaModel>& inputs, const BlockContext& ctx) {
  if (inputs.size() != 1) {
    throw InvalidValue(ctx.actor.instance + ": expected one input, got " + std::to_string(inputs.size()));
  }
  return std::move(inputs.front());
}

BlockOutput emit(MetaModel mm) {
  BlockOutput out;
  out.emissions.push_back({0, std::move(mm)});
  return out;
}

ParamSpec num(std::string name, double d) { return {std::move(name), "number", false, Json(d)}; }
ParamSpec integer(std::string name, std::int64_t d) { return {std::move(name), "integer", false, Json(d)}; }
ParamSpec flag(std::string name, bool d) { return {std::move(name), "bool", false, Json(d)}; }
ParamSpec text(std::string name, std::string d) { return {std::move(name), "text", false, Json(std::move(d))}; }
ParamSpec optional_num(std::string name) { return {std::move(name), "number", false, std::nullopt}; }

surrogate::SynthesisParams synthesis_params(const BlockContext& ctx, const ConfigStore& cfg) {
  surrogate::SynthesisParams p;
  p.part = ctx.text(cfg, "FPGA_part_number");
  if (auto c = ctx.param(cfg, "clock_period"); !c.is_null()) {
    if (!c.is_number()) throw InvalidValue(ctx.actor.instance + ": clock_period must be a number");
    p.clock_ns = c.get<double>();
  }
  p.default_bits = surrogate::parse_bit_pair(ctx.text(cfg, "default_precision"));
  return p;
}

std::vector<ParamSpec> synthesis_param_specs() {
  return {text("FPGA_part_number", "zynq7020"), optional_num("clock_period"),
          text("default_precision", "ap_fixed<18,8>")};
}

BlockType lambda(std::string name, Multiplicity m, std::vector<ParamSpec> params, BlockBehavior b) {
  BlockType t;
  t.name = std::move(name);
  t.role = Role::Lambda;
  t.multiplicity = m;
  t.params = std::move(params);
  t.behavior = std::move(b);
  return t;
}

constexpr Multiplicity kOneToOne{1, 1, 1, 1};

}  // namespace

BlockRegistry BlockRegistry::with_builtins() {
  BlockRegistry r;

  r.register_block_type(lambda(
      bn::kModelGen, {0, 0, 1, 1},
      {text("preset", "jet-dnn"), flag("train_en", false), integer("train_epochs", 0)},
      [](const BlockContext& ctx, std::vector<MetaModel> in) {
        auto mm = single(in, ctx);
        const auto preset = ctx.text(mm.cfg(), "preset");
        return emit(surrogate::model_gen(std::move(mm), preset, need_backend(ctx), ctx.actor));
      }));

  r.register_block_type(lambda(bn::kHls4ml, kOneToOne, synthesis_param_specs(),
                               [](const BlockContext& ctx, std::vector<MetaModel> in) {
                                 auto mm = single(in, ctx);
                                 const auto p = synthesis_params(ctx, mm.cfg());
                                 return emit(surrogate::lower_to_kernel(std::move(mm), p, need_backend(ctx),
                                                                        ctx.actor));
                               }));

  r.register_block_type(lambda(bn::kVivadoHls, kOneToOne, {}, [](const BlockContext& ctx, std::vector<MetaModel> in) {
    return emit(surrogate::lower_to_rtl(single(in, ctx), need_backend(ctx), ctx.actor));
  }));

  r.register_block_type(lambda(bn::kSynthesis, kOneToOne, synthesis_param_specs(),
                               [](const BlockContext& ctx, std::vector<MetaModel> in) {
                                 auto mm = single(in, ctx);
                                 const auto p = synthesis_params(ctx, mm.cfg());
                                 return emit(surrogate::synthesize(std::move(mm), p, need_backend(ctx), ctx.actor));
                               }));

  {
    auto t = lambda(bn::kPruning, kOneToOne,
                    {num("tolerate_acc_loss", 0.02), num("pruning_rate_thresh", 0.02),
                     flag("keep_all_candidates", true), integer("train_epochs", 0)},
                    [](const BlockContext& ctx, std::vector<MetaModel> in) {
                      auto mm = single(in, ctx);
                      oblocks::PruningParams p;
                      p.tolerate_acc_loss = ctx.number(mm.cfg(), "tolerate_acc_loss");
                      p.pruning_rate_thresh = ctx.number(mm.cfg(), "pruning_rate_thresh");
                      p.keep_all_candidates = ctx.flag(mm.cfg(), "keep_all_candidates");
                      p.train_epochs = ctx.integer(mm.cfg(), "train_epochs");
                      return emit(oblocks::prune_search(std::move(mm), p, need_backend(ctx), ctx.actor));
                    });
    t.role = Role::Opt;
    r.register_block_type(std::move(t));
  }
  {
    auto t = lambda(bn::kScaling, kOneToOne,
                    {num("default_scale_factor", 0.8), num("tolerate_acc_loss", 0.005), flag("scale_auto", true),
                     integer("max_trials_num", 16)},
                    [](const BlockContext& ctx, std::vector<MetaModel> in) {
                      auto mm = single(in, ctx);
                      oblocks::ScalingParams p;
                      p.scale_factor = ctx.number(mm.cfg(), "default_scale_factor");
                      p.tolerate_acc_loss = ctx.number(mm.cfg(), "tolerate_acc_loss");
                      p.scale_auto = ctx.flag(mm.cfg(), "scale_auto");
                      p.max_trials_num = ctx.integer(mm.cfg(), "max_trials_num");
                      return emit(oblocks::scale_search(std::move(mm), p, need_backend(ctx), ctx.actor));
                    });
    t.role = Role::Opt;
    r.register_block_type(std::move(t));
  }
  {
    auto t = lambda(bn::kQuantization, kOneToOne,
                    {num("tolerate_acc_loss", 0.01), integer("min_total_bits", 2), integer("bit_step", 1)},
                    [](const BlockContext& ctx, std::vector<MetaModel> in) {
                      auto mm = single(in, ctx);
                      oblocks::QuantParams p;
                      p.tolerate_acc_loss = ctx.number(mm.cfg(), "tolerate_acc_loss");
                      p.min_total_bits = static_cast<int>(ctx.integer(mm.cfg(), "min_total_bits"));
                      p.bit_step = static_cast<int>(ctx.integer(mm.cfg(), "bit_step"));
                      return emit(oblocks::quant_search(std::move(mm), p, need_backend(ctx), ctx.actor));
                    });
    t.role = Role::Opt;
    r.register_block_type(std::move(t));
  }

  r.register_block_type(lambda(
      bn::kExternal, kOneToOne,
      {{"command", "text", true, std::nullopt}, {"args", "list", false, Json::array()}, num("timeout_s", 30.0)},
      [](const BlockContext& ctx, std::vector<MetaModel> in) {
        auto mm = single(in, ctx);
        ExternalBlockSpec spec;
        spec.command = ctx.text(mm.cfg(), "command");
        const auto args = ctx.param(mm.cfg(), "args");
        if (!args.is_array()) throw InvalidValue(ctx.actor.instance + ": args must be a list");
        for (const auto& a : args) spec.args.push_back(a.is_string() ? a.get<std::string>() : a.dump());
        spec.timeout_s = ctx.number(mm.cfg(), "timeout_s");
        return emit(run_external_block(spec, std::move(mm), ctx.actor));
      }));

  auto kappa = [](std::string name, Multiplicity m, std::vector<ParamSpec> params, BlockBehavior b) {
    auto t = lambda(std::move(name), m, std::move(params), std::move(b));
    t.role = Role::Kappa;
    return t;
  };

  r.register_block_type(kappa(bn::kFork, {1, 1, 2, kUnbounded}, {}, [](const BlockContext& ctx, std::vector<MetaModel> in) {
    auto clones = kblocks::fork(single(in, ctx), ctx.out_labels.size(), ctx.actor);
    BlockOutput out;
    for (std::size_t i = 0; i < clones.size(); ++i) out.emissions.push_back({i, std::move(clones[i])});
    return out;
  }));

  r.register_block_type(kappa(bn::kJoin, {2, kUnbounded, 1, 1}, {}, [](const BlockContext& ctx, std::vector<MetaModel> in) {
    return emit(kblocks::join(single(in, ctx), ctx.actor));
  }));

  {
    auto t = kappa(bn::kBranch, {1, 1, 2, 2},
                   {text("predicate", "overmapped"), num("threshold", 1.0), text("metric", ""), num("bound", 0.0),
                    text("action", ""), {"action_key", "list", false, Json::array()}, num("action_delta", 0.01),
                    num("action_max", 1.0)},
                   [](const BlockContext& ctx, std::vector<MetaModel> in) {
                     auto mm = single(in, ctx);
                     const auto& controls = need_controls(ctx);
                     const auto& cfg = mm.cfg();
                     const auto& pred = controls.predicate(ctx.text(cfg, "predicate"));
                     Json pparams{{"threshold", ctx.number(cfg, "threshold")},
                                  {"metric", ctx.text(cfg, "metric")},
                                  {"bound", ctx.number(cfg, "bound")}};
                     const auto action_name = ctx.text(cfg, "action");
                     const Action* action = action_name.empty() ? nullptr : &controls.action(action_name);
                     Json aparams{{"key", ctx.param(cfg, "action_key")},
                                  {"delta", ctx.number(cfg, "action_delta")},
                                  {"max", ctx.number(cfg, "action_max")}};
                     auto res = kblocks::branch(std::move(mm), pred, pparams, action, aparams, ctx.actor);
                     BlockOutput out;
                     out.emissions.push_back({ctx.slot_for_label(res.taken ? "true" : "false"), std::move(res.mm)});
                     return out;
                   });
    t.labeled_outputs = true;
    r.register_block_type(std::move(t));
  }

  {
    auto t = kappa(bn::kReduce, {2, kUnbounded, 1, 1},
                   {text("mode", "select_best"), text("objective", "accuracy:max"),
                    {"objectives", "list", false, Json::array({"accuracy:max", "param_count:min"})}},
                   [](const BlockContext& ctx, std::vector<MetaModel> in) {
                     if (in.empty()) throw MissingBranch(ctx.actor.instance + ": no branch arrived");
                     const auto& cfg = in.front().cfg();
                     kblocks::ReduceSpec spec;
                     const auto mode = ctx.text(cfg, "mode");
                     if (mode == "select_best") {
                       spec.mode = kblocks::ReduceMode::SelectBest;
                       spec.objectives = {kblocks::parse_objective(ctx.text(cfg, "objective"))};
                     } else if (mode == "pareto") {
                       spec.mode = kblocks::ReduceMode::Pareto;
                       spec.objectives.clear();
                       const auto list = ctx.param(cfg, "objectives");
                       if (!list.is_array()) throw InvalidValue(ctx.actor.instance + ": objectives must be a list");
                       for (const auto& o : list) spec.objectives.push_back(kblocks::parse_objective(o.get<std::string>()));
                     } else {
                       throw InvalidValue(ctx.actor.instance + ": mode must be select_best or pareto");
                     }
                     return emit(kblocks::reduce(in, ctx.in_degree, spec, ctx.actor));
                   });
    t.firing = Firing::Barrier;
    r.register_block_type(std::move(t));
  }

  r.register_block_type(kappa(bn::kStop, {1, kUnbounded, 0, 0}, {text("callback", "focus_id")},
                              [](const BlockContext& ctx, std::vector<MetaModel> in) {
                                auto mm = single(in, ctx);
                                const auto& cb = need_controls(ctx).callback(ctx.text(mm.cfg(), "callback"));
                                BlockOutput out;
                                Json value = kblocks::stop(mm, cb);
                                out.stop = StopSignal{std::move(value), std::move(mm)};
                                return out;
                              }));
  return r;
}

}  // namespace metaml
