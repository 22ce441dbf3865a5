#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "projdecomp/blocksum.hpp"
#include "projdecomp/conditions.hpp"
#include "projdecomp/error.hpp"
#include "projdecomp/ii1.hpp"

namespace projdecomp {

using nlohmann::json;

json to_json(const Rational& r);
/// Object {"num","den"}; strings such as "3/2" and plain JSON numbers also parse.
Rational rational_from_json(const json& j);

json to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);
json to_json(const HermitianMatrix& m);
/// checked = false symmetrizes silently (certificate replay); true throws NonHermitianInput.
HermitianMatrix hermitian_from_json(const json& j, bool checked = true, const TolerancePolicy& tol = {});
/// Rank-one projections serialize as {"vector": …}; others as {"matrix": …}.
json to_json(const ProjectionMatrix& p);
/// Never rejects on idempotency: auditors report that instead.
ProjectionMatrix projection_from_json(const json& j);

json to_json(const RuleSequence& s);
RuleSequence sequence_from_json(const json& j);

struct II1Pair {
  Rational lambda, mu, tau_f, tau_e;
};

struct Payload {
  ModelOperator op;
  std::optional<II1Pair> pair;  // set for kind "ii1_pair"; op then holds the equivalent atom list
  std::optional<FactorModel> model;
  std::string kind;
};

/// Default model per payload kind when none is given.
FactorModel default_model(const Payload& p);
Payload payload_from_json(const json& j, const TolerancePolicy& tol = {});
json to_json(const ModelOperator& a);

json to_json(const FiniteMatrixCert& c);
FiniteMatrixCert finite_cert_from_json(const json& j);

json to_json(const BlockStreamCert& c);
BlockStreamCert block_stream_from_json(const json& j);

json to_json(const SpectralWeightList& a);
SpectralWeightList atoms_from_json(const json& j);
json to_json(const II1Cert& c);
II1Cert ii1_cert_from_json(const json& j);

json to_json(const TruncationReport& r);
json to_json(const InvariantReport& r);
json to_json(const MaterializeReport& r);
json to_json(const MaterializedTruncation& m, bool include_matrices);
json to_json(const Prop51Isometry& p);

json error_json(const Error& e);

}  // namespace projdecomp
