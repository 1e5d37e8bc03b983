#include <doctest.h>

#include <cmath>
#include <random>

#include "pima/encoders/projection.hpp"
#include "pima/encoders/text_encoder.hpp"
#include "pima/encoders/vocab.hpp"
#include "pima/error.hpp"
#include "pima/numerics/gradcheck.hpp"
#include "pima/numerics/ops.hpp"
#include "support.hpp"

using namespace pima;
using encoders::Vocabulary;

namespace {

double gelu_ref(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

encoders::ProjectionParams identity_projection(std::size_t d) {
  encoders::ProjectionParams p;
  p.hidden_weight = Tensor::identity(d);
  p.hidden_bias = Tensor::zeros(1, d);
  p.out_weight = Tensor::identity(d);
  p.out_bias = Tensor::zeros(1, d);
  return p;
}

}  // namespace

TEST_CASE("vocabulary reserves pad and unk") {
  Vocabulary v;
  CHECK(v.size() == 2);
  CHECK(v.id("<pad>") == Vocabulary::kPad);
  CHECK(v.id("<unk>") == Vocabulary::kUnk);
  const int a = v.add("paracetamol");
  CHECK(v.add("paracetamol") == a);
  CHECK(v.token(a) == "paracetamol");
}

TEST_CASE("tokenize examples") {
  Vocabulary v;
  const int p = v.add("paracetamol");
  const int d = v.add("500mg");
  CHECK(encoders::tokenize("Paracetamol 500mg", v) == std::vector<int>{p, d});
  CHECK(encoders::tokenize("", v) == std::vector<int>{Vocabulary::kPad});
  CHECK(encoders::tokenize("   ", v) == std::vector<int>{Vocabulary::kPad});
  CHECK(encoders::tokenize("xyzzy", v) == std::vector<int>{Vocabulary::kUnk});
}

TEST_CASE("vocabulary tsv round trip and parse errors") {
  Vocabulary v;
  v.add("b");
  v.add("a");
  const Vocabulary back = Vocabulary::from_tsv(v.to_tsv());
  CHECK(back == v);
  CHECK(back.id("a") == v.id("a"));
  try {
    Vocabulary::from_tsv("<pad>\t0\n<unk>\t1\nbroken line\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(Vocabulary::from_tsv("<pad>\t0\n<unk>\t1\nx\t5\n"), ParseError);
}

TEST_CASE("encode_text shapes, determinism and range checks") {
  Rng rng(1);
  const auto params = encoders::EncoderParams::init(10, 8, 16, rng);
  const std::vector<int> seq{2, 3, 4};
  const Tensor a = encoders::encode_text(seq, params);
  CHECK(a.rows() == 1);
  CHECK(a.cols() == 8);
  const Tensor b = encoders::encode_text(seq, params);
  CHECK(std::vector<double>(a.data().begin(), a.data().end()) == std::vector<double>(b.data().begin(), b.data().end()));
  const std::vector<int> permuted{4, 2, 3};
  const Tensor c = encoders::encode_text(permuted, params);
  double diff = 0;
  for (std::size_t i = 0; i < 8; ++i) diff += std::abs(a.data()[i] - c.data()[i]);
  CHECK(diff > 1e-6);
  CHECK_THROWS_AS(encoders::encode_text(std::vector<int>{}, params), ShapeError);
  CHECK_THROWS_AS(encoders::encode_text(std::vector<int>{10}, params), ShapeError);
  CHECK_THROWS_AS(encoders::encode_text(std::vector<int>{-1}, params), ShapeError);
  const Tensor many = encoders::encode_texts(std::vector<std::vector<int>>{{2}, {3, 4}}, params);
  CHECK(many.rows() == 2);
}

TEST_CASE("layer norm gains start positive") {
  Rng rng(2);
  const auto params = encoders::EncoderParams::init(5, 4, 8, rng);
  for (double g : params.norm1_gain.data()) CHECK(g > 0);
  for (double g : params.norm2_gain.data()) CHECK(g > 0);
}

TEST_CASE("single position attention weights the only value fully") {
  Rng rng(3);
  const auto params = encoders::EncoderParams::init(5, 4, 8, rng);
  std::mt19937_64 gen(4);
  const Tensor x = testing::random_tensor(1, 4, gen, -1, 1, false);
  const Tensor att = encoders::self_attention(x, params);
  const Tensor expected = ops::matmul(ops::matmul(x, ops::transpose(params.value)), ops::transpose(params.output));
  for (std::size_t i = 0; i < 4; ++i) CHECK(att.data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-12));
}

TEST_CASE("zero query and key give the mean of the values") {
  Rng rng(5);
  auto params = encoders::EncoderParams::init(5, 3, 6, rng);
  params.query = Tensor::zeros(3, 3);
  params.key = Tensor::zeros(3, 3);
  params.output = Tensor::identity(3);
  std::mt19937_64 gen(6);
  const Tensor x = testing::random_tensor(4, 3, gen, -1, 1, false);
  const Tensor v = ops::matmul(x, ops::transpose(params.value));
  const Tensor att = encoders::self_attention(x, params);
  const Tensor mean = ops::col_mean(v);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(att.at(r, c) == doctest::Approx(mean.at(0, c)).epsilon(1e-12));
  }
}

TEST_CASE("projection reductions and width") {
  const Tensor x = Tensor::from_rows({{0.5, 1.5, 0.0}});
  const Tensor y = encoders::project(x, identity_projection(3));
  for (std::size_t i = 0; i < 3; ++i) CHECK(y.data()[i] == doctest::Approx(gelu_ref(x.data()[i])).epsilon(1e-14));
  Rng rng(7);
  auto p = encoders::ProjectionParams::init(5, 12, rng);
  CHECK(p.output_width() == 256);
  for (Tensor* b : {&p.hidden_bias, &p.out_bias}) {
    for (double& v : b->mutable_data()) v = 0.0;
  }
  const Tensor z = encoders::project(Tensor::zeros(2, 5), p);
  CHECK(z.cols() == 256);
  for (double v : z.data()) CHECK(v == 0.0);
  CHECK_THROWS_AS(encoders::project(Tensor::zeros(1, 4), p), ShapeError);
}

TEST_CASE("projection and encoder gradients pass finite differences") {
  Rng rng(8);
  const auto proj = encoders::ProjectionParams::init(4, 6, rng, 5);
  std::mt19937_64 gen(9);
  const Tensor x = testing::random_tensor(2, 4, gen);
  CHECK(finite_difference_check([&](const Tensor& t) { return ops::sum(ops::square(encoders::project(t, proj))); }, x) <
        1e-6);
  const auto enc = encoders::EncoderParams::init(6, 4, 5, rng);
  const std::vector<int> seq{2, 3, 5, 2};
  std::vector<Tensor> leaves{enc.token_embedding, enc.query, enc.key, enc.value, enc.output, enc.ff_in_weight,
                             enc.ff_in_bias, enc.ff_out_weight, enc.ff_out_bias, enc.norm1_gain, enc.norm1_bias,
                             enc.norm2_gain, enc.norm2_bias};
  const auto r = finite_difference_check(
      [&] { return ops::sum(ops::square(ops::add_scalar(encoders::encode_text(seq, enc), 0.3))); }, leaves);
  CHECK(r.max_rel_error < 1e-6);
  // Every parameter tensor receives gradient.
  for (Tensor& t : leaves) t.zero_grad();
  backward(ops::sum(ops::square(ops::add_scalar(encoders::encode_text(seq, enc), 0.3))));
  for (const Tensor& t : leaves) {
    double norm = 0;
    for (double g : t.grad()) norm += g * g;
    CHECK(norm > 0);
  }
}

TEST_CASE("pill feature ingestion validates width and finiteness") {
  const encoders::PillFeatureRecord ok{"p7", std::vector<double>(8, 0.25)};
  CHECK(encoders::ingest_pill_features(ok, 8) == ok.features);
  encoders::PillFeatureRecord nan_rec{"p8", std::vector<double>(8, 0.0)};
  nan_rec.features[3] = std::nan("");
  try {
    encoders::ingest_pill_features(nan_rec, 8);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("p8") != std::string::npos);
  }
  CHECK_THROWS_AS(encoders::ingest_pill_features(ok, 7), Error);
}
