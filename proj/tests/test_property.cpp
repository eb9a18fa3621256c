#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace resinet;

TEST_CASE("query validation") {
  const Network net = testutil::example_network();
  Query q = testutil::example_query();
  CHECK_NOTHROW(validate_query(net, q));
  q.input_upper[0] = -1.0;
  CHECK_THROWS_AS(validate_query(net, q), ParseError);
  q = testutil::example_query();
  q.input_lower.pop_back();
  CHECK_THROWS_AS(validate_query(net, q), ParseError);
}

TEST_CASE("check_witness is exact forward evaluation against the threshold") {
  const Network net = testutil::example_network();
  const Query q = testutil::example_query(8.5);
  CHECK(check_witness(net, q, {0.0, 1.0}));       // N(0,1) = 9 > 8.5
  CHECK(!check_witness(net, q, {0.0, 0.9}));      // 8.1
  CHECK(!check_witness(net, q, {2.0, 1.0}));      // outside the box
  CHECK(!check_witness(net, q, {0.0, -0.0001}));  // outside the box
  CHECK_THROWS_AS(check_witness(net, q, {0.0}), Error);
}

TEST_CASE("query json round-trip") {
  const Query q = testutil::example_query();
  const ParsedQuery back = parse_query(serialize_query(q));
  CHECK(!back.less_than);
  CHECK(back.q.input_lower == q.input_lower);
  CHECK(back.q.input_upper == q.input_upper);
  CHECK(back.q.output_threshold == q.output_threshold);
}

TEST_CASE("output_lt queries negate the network") {
  const Network net = testutil::example_network();
  const ParsedQuery pq = parse_query_text(
      R"({"input_lower": [0, 0], "input_upper": [1, 1], "output_lt": -2})");
  REQUIRE(pq.less_than);
  auto [negated, q] = prepare_query(net, pq);
  // N(x) < -2 becomes -N(x) > 2; N never goes below -3 on this box.
  CHECK(q.output_threshold == Catch::Approx(2.0));
  CHECK(evaluate(negated, {0.0, 1.0}) == Catch::Approx(-9.0));

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vec x = testutil::random_point(rng, q);
    CHECK(evaluate(negated, x) == Catch::Approx(-evaluate(net, x)).margin(1e-12));
  }
}

TEST_CASE("parse_query rejects malformed input") {
  CHECK_THROWS_AS(parse_query_text("{}"), ParseError);
  CHECK_THROWS_AS(parse_query_text(R"({"input_lower": [0], "input_upper": [1]})"), ParseError);
  CHECK_THROWS_AS(
      parse_query_text(R"({"input_lower": [0], "input_upper": [1], "output_gt": "x"})"),
      ParseError);
  // Inverted bounds pass parsing but fail validation against a network.
  const ParsedQuery inverted =
      parse_query_text(R"({"input_lower": [2, 0], "input_upper": [1, 1], "output_gt": 0})");
  CHECK_THROWS_AS(prepare_query(testutil::example_network(), inverted), ParseError);
}

TEST_CASE("verdict helpers") {
  const Verdict s = Verdict::sat({1.0, 2.0});
  CHECK(s.is_sat());
  CHECK(s.witness == Vec{1.0, 2.0});
  CHECK(std::string(verdict_name(s.kind)) == "SAT");
  CHECK(std::string(verdict_name(Verdict::unsat().kind)) == "UNSAT");
  CHECK(std::string(verdict_name(Verdict::timeout().kind)) == "TIMEOUT");
}

TEST_CASE("shift_box_to_origin reparameterizes exactly") {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 25; ++n) {
    const Network net = testutil::random_network(rng);
    const Query q = testutil::random_box(rng, net.input_width, 2.0);
    const auto [shifted, sq] = shift_box_to_origin(net, q);
    REQUIRE(sq.dim() == q.dim());
    for (int i = 0; i < q.dim(); ++i) {
      const auto d = static_cast<size_t>(i);
      CHECK(sq.input_lower[d] == 0.0);
      CHECK(sq.input_upper[d] == Catch::Approx(q.input_upper[d] - q.input_lower[d]));
    }
    CHECK(sq.output_threshold == q.output_threshold);
    for (int i = 0; i < 200; ++i) {
      const Vec x = testutil::random_point(rng, sq);
      Vec orig = x;
      for (size_t d = 0; d < orig.size(); ++d) orig[d] += q.input_lower[d];
      CHECK(evaluate(shifted, x) == Catch::Approx(evaluate(net, orig)).margin(1e-9));
    }
  }
}

TEST_CASE("shift_box_to_origin leaves an origin box untouched") {
  const Network net = testutil::example_network();
  const Query q = testutil::example_query();
  const auto [shifted, sq] = shift_box_to_origin(net, q);
  CHECK(same_network(shifted, net));
  CHECK(sq.input_lower == q.input_lower);
  CHECK(sq.input_upper == q.input_upper);
}
