#include "mfg/instance_io.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace mfg {

using nlohmann::json;

namespace {

json kernel_to_json(const Kernel& kernel) {
  switch (kernel.kind) {
    case Kernel::Kind::Identity:
      return {{"kind", "identity"}};
    case Kernel::Kind::Gaussian:
      return {{"kind", "gaussian"}, {"bandwidth", kernel.param}};
    case Kernel::Kind::Laplace:
      return {{"kind", "laplace"}, {"scale", kernel.param}};
  }
  throw BadParams("kernel_to_json: unknown kind");
}

Kernel kernel_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return Kernel::identity();
  if (kind == "gaussian")
    return Kernel::gaussian(j.at("bandwidth").get<double>());
  if (kind == "laplace") return Kernel::laplace(j.at("scale").get<double>());
  throw BadParams("kernel: unknown kind \"" + kind + "\"");
}

json generator_to_json(const GeneratorSpec& g) {
  return {{"kind", g.kind},
          {"params",
           {{"n", g.n},
            {"dims", g.dims},
            {"m", g.m},
            {"gamma", g.gamma},
            {"r_max", g.r_max},
            {"coupling", g.coupling},
            {"slip", g.slip},
            {"jump", g.jump},
            {"seed", g.seed},
            {"reward_width", g.reward_width}}}};
}

GeneratorSpec generator_from_json(const json& j) {
  GeneratorSpec g;
  g.kind = j.at("kind").get<std::string>();
  const json& p = j.at("params");
  g.n = p.value("n", g.n);
  g.dims = p.value("dims", g.dims);
  g.m = p.value("m", g.m);
  g.gamma = p.value("gamma", g.gamma);
  g.r_max = p.value("r_max", g.r_max);
  g.coupling = p.value("coupling", g.coupling);
  g.slip = p.value("slip", g.slip);
  g.jump = p.value("jump", g.jump);
  g.seed = p.value("seed", g.seed);
  g.reward_width = p.value("reward_width", g.reward_width);
  return g;
}

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw BadParams("malformed JSON");
  return j;
}

}  // namespace

std::string instance_to_json(const Instance& instance) {
  const MFGModel& model = instance.model;
  json states = json::array();
  for (int i = 0; i < model.states().size(); ++i) {
    json row = json::array();
    for (int d = 0; d < model.states().dim(); ++d)
      row.push_back(model.states().points()(i, d));
    states.push_back(std::move(row));
  }
  json nu0 = json::array();
  for (int i = 0; i < model.nu0().size(); ++i)
    nu0.push_back(model.nu0()(i));

  json j = {{"schema", "mfg-instance-v1"},
            {"generator", generator_to_json(instance.generator)},
            {"kernel", kernel_to_json(instance.kernel)},
            {"states", std::move(states)},
            {"m", model.actions().size()},
            {"gamma", model.gamma()},
            {"r_max", model.r_max()},
            {"nu0", std::move(nu0)}};
  return j.dump(2);
}

Instance instance_from_json(const std::string& text) {
  const json j = parse(text);
  const GeneratorSpec spec = generator_from_json(j.at("generator"));
  const Kernel kernel = kernel_from_json(j.at("kernel"));
  Instance instance = generate_instance(spec, kernel);

  // The materialized fields must agree with what the spec regenerates;
  // otherwise the file was edited inconsistently.
  const MFGModel& model = instance.model;
  if (j.at("m").get<int>() != model.actions().size() ||
      std::abs(j.at("gamma").get<double>() - model.gamma()) > 1e-12 ||
      std::abs(j.at("r_max").get<double>() - model.r_max()) > 1e-12)
    throw InvalidModel("instance file disagrees with its generator spec");
  const json& states = j.at("states");
  if (static_cast<int>(states.size()) != model.states().size())
    throw InvalidModel("instance file: state count mismatch");
  for (int i = 0; i < model.states().size(); ++i)
    for (int d = 0; d < model.states().dim(); ++d)
      if (std::abs(states[i][d].get<double>() -
                   model.states().points()(i, d)) > 1e-9)
        throw InvalidModel("instance file: state coordinates mismatch");
  const json& nu0 = j.at("nu0");
  for (int i = 0; i < model.nu0().size(); ++i)
    if (std::abs(nu0[i].get<double>() - model.nu0()(i)) > 1e-12)
      throw InvalidModel("instance file: nu0 mismatch");
  return instance;
}

void save_instance(const Instance& instance,
                   const std::filesystem::path& path) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw BadParams("cannot open " + path.string() + " for writing");
  out << instance_to_json(instance) << '\n';
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BadParams("cannot open instance file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return instance_from_json(buffer.str());
}

RunConfig run_config_from_json(const std::string& text) {
  const json j = parse(text);
  RunConfig c;
  if (j.contains("instance")) c.instance_path = j.at("instance").get<std::string>();
  if (j.contains("generator"))
    c.generator = generator_from_json(j.at("generator"));
  if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
  if (c.instance_path.empty() && !c.generator)
    throw BadParams("run config: need \"instance\" or \"generator\"");
  c.lambda = j.value("lambda", c.lambda);
  c.T = j.value("T", c.T);
  if (j.contains("c_alpha")) c.c_alpha = j.at("c_alpha").get<double>();
  if (j.contains("c_beta")) c.c_beta = j.at("c_beta").get<double>();
  if (j.contains("c_eta")) c.c_eta = j.at("c_eta").get<double>();
  const std::string mode = j.value("mode", "D");
  if (mode != "D" && mode != "W")
    throw BadParams("run config: mode must be \"D\" or \"W\"");
  c.mode = mode == "D" ? Mode::D : Mode::W;

  if (j.contains("evaluator")) {
    const json& e = j.at("evaluator");
    const std::string kind = e.value("kind", "exact");
    if (kind == "exact") {
      c.evaluator = EvaluatorConfig::exact();
    } else if (kind == "noisy") {
      c.evaluator = EvaluatorConfig::noisy(e.at("epsilon").get<double>(),
                                           e.value("seed", 0ULL));
    } else if (kind == "td0") {
      c.evaluator =
          EvaluatorConfig::td0(e.value("episodes", 10000),
                               e.value("horizon", 100), e.value("seed", 0ULL),
                               e.value("step_c", 100.0));
    } else {
      throw BadParams("run config: unknown evaluator kind \"" + kind + "\"");
    }
  }

  const std::string diag = j.value("diagnostics", "full");
  if (diag == "full")
    c.diagnostics = DiagnosticsLevel::Full;
  else if (diag == "endpoint")
    c.diagnostics = DiagnosticsLevel::Endpoint;
  else
    throw BadParams("run config: diagnostics must be full|endpoint");
  c.seed = j.value("seed", 0ULL);
  c.ne_tol = j.value("ne_tol", c.ne_tol);
  c.baseline = j.value("baseline", false);
  c.inner_tol = j.value("inner_tol", c.inner_tol);
  c.output_dir = j.value("output", c.output_dir);
  c.label = j.value("label", c.label);
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json j = {{"schema", "mfg-run-v1"},
            {"lambda", c.lambda},
            {"T", c.T},
            {"mode", c.mode == Mode::D ? "D" : "W"},
            {"diagnostics",
             c.diagnostics == DiagnosticsLevel::Full ? "full" : "endpoint"},
            {"seed", c.seed},
            {"ne_tol", c.ne_tol},
            {"baseline", c.baseline},
            {"inner_tol", c.inner_tol},
            {"output", c.output_dir},
            {"label", c.label}};
  if (!c.instance_path.empty()) j["instance"] = c.instance_path;
  if (c.generator) j["generator"] = generator_to_json(*c.generator);
  if (c.kernel) j["kernel"] = kernel_to_json(*c.kernel);
  if (c.c_alpha) j["c_alpha"] = *c.c_alpha;
  if (c.c_beta) j["c_beta"] = *c.c_beta;
  if (c.c_eta) j["c_eta"] = *c.c_eta;
  json e;
  switch (c.evaluator.kind) {
    case EvaluatorConfig::Kind::Exact:
      e = {{"kind", "exact"}};
      break;
    case EvaluatorConfig::Kind::Noisy:
      e = {{"kind", "noisy"},
           {"epsilon", c.evaluator.epsilon},
           {"seed", c.evaluator.seed}};
      break;
    case EvaluatorConfig::Kind::Td0:
      e = {{"kind", "td0"},
           {"episodes", c.evaluator.episodes},
           {"horizon", c.evaluator.horizon},
           {"step_c", c.evaluator.step_c},
           {"seed", c.evaluator.seed}};
      break;
  }
  j["evaluator"] = std::move(e);
  return j.dump(2);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BadParams("cannot open run config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_json(buffer.str());
}

SweepSpec sweep_spec_from_json(const std::string& text) {
  const json j = parse(text);
  SweepSpec spec;
  const json& base = j.at("base");
  spec.base = run_config_from_json(base.dump());
  const json& axis = j.at("axis");
  spec.axis = axis.at("name").get<std::string>();
  if (spec.axis != "T" && spec.axis != "epsilon" && spec.axis != "lambda" &&
      spec.axis != "coupling")
    throw BadParams("sweep: axis must be T|epsilon|lambda|coupling");
  for (const auto& v : axis.at("values")) spec.values.push_back(v.get<double>());
  if (spec.values.empty()) throw BadParams("sweep: empty axis");
  spec.replications = j.value("replications", 1);
  if (spec.replications < 1) throw BadParams("sweep: replications < 1");
  return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BadParams("cannot open sweep spec " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return sweep_spec_from_json(buffer.str());
}

}  // namespace mfg
