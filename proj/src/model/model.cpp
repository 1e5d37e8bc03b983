#include "pima/model/model.hpp"

#include "pima/error.hpp"
#include "pima/graph/layout.hpp"
#include "pima/numerics/ops.hpp"

namespace pima::model {

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("model: vocab_size must be at least 2");
  if (token_width == 0 || ff_hidden == 0 || feature_width == 0 || sage_hidden == 0 || projection_hidden == 0 ||
      projection_width == 0) {
    throw ConfigError("model: widths must be positive");
  }
  if (sage_layers == 0) throw ConfigError("model: sage_layers must be at least 1");
}

std::string_view to_string(Objective o) { return o == Objective::Pima ? "pima" : "clip"; }

Objective parse_objective(std::string_view text) {
  if (text == "pima") return Objective::Pima;
  if (text == "clip") return Objective::Clip;
  throw ConfigError("unknown objective '" + std::string(text) + "' (expected pima or clip)");
}

std::vector<NamedTensor> Model::named_parameters() const {
  std::vector<NamedTensor> out = {
      {"encoder/token_embedding", encoder.token_embedding},
      {"encoder/query", encoder.query},
      {"encoder/key", encoder.key},
      {"encoder/value", encoder.value},
      {"encoder/output", encoder.output},
      {"encoder/ff_in_weight", encoder.ff_in_weight},
      {"encoder/ff_in_bias", encoder.ff_in_bias},
      {"encoder/ff_out_weight", encoder.ff_out_weight},
      {"encoder/ff_out_bias", encoder.ff_out_bias},
      {"encoder/norm1_gain", encoder.norm1_gain},
      {"encoder/norm1_bias", encoder.norm1_bias},
      {"encoder/norm2_gain", encoder.norm2_gain},
      {"encoder/norm2_bias", encoder.norm2_bias},
  };
  if (config.use_graph) {
    for (std::size_t k = 0; k < sage.layers.size(); ++k) {
      out.push_back({"sage/layer" + std::to_string(k), sage.layers[k]});
    }
    out.push_back({"sage/classifier_weight", sage.classifier_weight});
    out.push_back({"sage/classifier_bias", sage.classifier_bias});
  }
  auto add_projection = [&out](const std::string& prefix, const encoders::ProjectionParams& p) {
    out.push_back({prefix + "/hidden_weight", p.hidden_weight});
    out.push_back({prefix + "/hidden_bias", p.hidden_bias});
    out.push_back({prefix + "/out_weight", p.out_weight});
    out.push_back({prefix + "/out_bias", p.out_bias});
  };
  add_projection("text_projection", text_projection);
  add_projection("image_projection", image_projection);
  return out;
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Model m;
  m.config = config;
  m.encoder = encoders::EncoderParams::init(config.vocab_size, config.token_width, config.ff_hidden, rng);
  if (config.use_graph) {
    std::size_t in = config.token_width;
    for (std::size_t k = 0; k < config.sage_layers; ++k) {
      m.sage.layers.push_back(uniform_init(config.sage_hidden, 2 * in, 2 * in, rng));
      in = config.sage_hidden;
    }
    m.sage.classifier_weight = uniform_init(1, in, in, rng);
    m.sage.classifier_bias = uniform_init(1, 1, in, rng);
  }
  m.text_projection = encoders::ProjectionParams::init(config.token_width, config.projection_hidden, rng,
                                                       config.projection_width);
  m.image_projection = encoders::ProjectionParams::init(config.feature_width, config.projection_hidden, rng,
                                                        config.projection_width);
  return m;
}

PreparedSample prepare_sample(const data::Prescription& p) {
  if (p.boxes.empty()) throw Error("prescription " + std::to_string(p.id) + ": no text boxes");
  if (p.pills.empty()) throw Error("prescription " + std::to_string(p.id) + ": no pills");
  PreparedSample s;
  s.id = p.id;
  for (const auto& box : p.boxes) {
    if (box.tokens.empty()) throw Error("prescription " + std::to_string(p.id) + ": box " + std::to_string(box.id) +
                                        " is not tokenized");
    s.tokens.push_back(box.tokens);
  }
  s.neighbor_mean = graph::neighbor_mean_matrix(graph::build_layout_graph(std::span<const graph::TextBox>(p.boxes)));
  const std::size_t width = p.pills.front().features.size();
  std::vector<double> features;
  features.reserve(p.pills.size() * width);
  for (const auto& pill : p.pills) {
    if (pill.features.size() != width) {
      throw ShapeError("prescription " + std::to_string(p.id) + ": pill " + std::to_string(pill.id) + " has " +
                       std::to_string(pill.features.size()) + " features, expected " + std::to_string(width));
    }
    features.insert(features.end(), pill.features.begin(), pill.features.end());
  }
  s.features = Tensor::from(p.pills.size(), width, std::move(features));
  s.labels = p.labels();
  s.matches = p.correspondence();
  return s;
}

std::vector<PreparedSample> prepare_samples(const std::vector<data::Prescription>& ps) {
  std::vector<PreparedSample> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(prepare_sample(p));
  return out;
}

ForwardResult score(const Model& model, const PreparedSample& sample, double cosine_eps) {
  const ModelConfig& cfg = model.config;
  if (sample.features.cols() != cfg.feature_width) {
    throw ShapeError("sample " + std::to_string(sample.id) + ": pill features have width " +
                     std::to_string(sample.features.cols()) + ", model expects " + std::to_string(cfg.feature_width));
  }
  ForwardResult r;
  const Tensor text = encoders::encode_texts(sample.tokens, model.encoder);
  Tensor text_proj = encoders::project(text, model.text_projection);
  if (cfg.use_graph) {
    const Tensor h = graph::sage_forward(sample.neighbor_mean, text, model.sage);
    r.g = graph::pseudo_classify(h, model.sage.classifier_weight, model.sage.classifier_bias);
    text_proj = graph::weight_text_embeddings(text_proj, r.g);
  } else {
    r.g = Tensor::filled(sample.tokens.size(), 1, 1.0);
  }
  const Tensor pill_proj = encoders::project(sample.features, model.image_projection);
  r.similarity = alignment::similarity_matrix(pill_proj, text_proj, cosine_eps);
  return r;
}

ForwardResult forward(const Model& model, const PreparedSample& sample, const alignment::LossConfig& loss,
                      Objective objective) {
  ForwardResult r = score(model, sample, loss.cosine_eps);
  r.classification = model.config.use_graph ? alignment::classification_loss(r.g, sample.labels) : Tensor::scalar(0.0);
  r.matching = objective == Objective::Pima ? alignment::matching_loss(r.similarity, sample.matches, loss.margin)
                                            : alignment::clip_style_loss(r.similarity, sample.matches, loss.margin);
  r.total = alignment::total_loss(r.matching, r.classification, loss.balance);
  return r;
}

std::vector<alignment::MatchDecision> predict(const Model& model, const PreparedSample& sample,
                                              const alignment::LossConfig& loss) {
  NoGradGuard guard;
  const ForwardResult r = score(model, sample, loss.cosine_eps);
  return alignment::decide_matches(r.similarity, r.g.data(), loss.threshold);
}

}  // namespace pima::model
