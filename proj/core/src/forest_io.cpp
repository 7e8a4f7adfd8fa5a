#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "condcov/error.hpp"
#include "condcov/forest.hpp"

namespace condcov {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "condcov-forest";
constexpr int kVersion = 1;

bool wants_cbor(const std::string& path) {
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".cbor") == 0;
}

json to_json(const CovForest& forest) {
  const ForestConfig& c = forest.config();
  json trees = json::array();
  for (const auto& tree : forest.trees()) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
      if (node.split) {
        nodes.push_back({node.split->covariate, node.split->cutpoint, node.split->criterion, node.left,
                         node.right});
      } else {
        nodes.push_back({node.leaf});
      }
    }
    json leaves = json::array();
    for (const auto& leaf : tree.leaves) {
      leaves.push_back({{"n", leaf.n}, {"cov", std::vector<double>(leaf.cov.packed().begin(), leaf.cov.packed().end())}});
    }
    trees.push_back({{"nodes", std::move(nodes)}, {"leaves", std::move(leaves)}, {"inbag_size", tree.inbag.size()}});
  }
  return {
      {"format", kFormat},
      {"version", kVersion},
      {"p", forest.dim()},
      {"q", forest.q()},
      {"training_fingerprint", forest.training_fingerprint()},
      {"config",
       {{"n_trees", c.n_trees},
        {"min_node_size", c.min_node_size},
        {"mtry", c.mtry},
        {"max_candidate_cutpoints", c.max_candidate_cutpoints},
        {"include_diagonal", c.include_diagonal},
        {"seed", c.seed}}},
      {"trees", std::move(trees)},
  };
}

CovForest from_json(const json& doc) {
  if (doc.value("format", "") != kFormat) fail(ErrorCode::ParseError, "not a condcov forest file");
  if (doc.value("version", 0) != kVersion) {
    fail(ErrorCode::ParseError, "unsupported forest file version " + doc.value("version", json()).dump());
  }
  const auto p = doc.at("p").get<std::size_t>();
  const auto q = doc.at("q").get<std::size_t>();
  const json& jc = doc.at("config");
  ForestConfig c;
  c.n_trees = jc.at("n_trees").get<std::size_t>();
  c.min_node_size = jc.at("min_node_size").get<std::size_t>();
  c.mtry = jc.at("mtry").get<std::size_t>();
  c.max_candidate_cutpoints = jc.at("max_candidate_cutpoints").get<std::size_t>();
  c.include_diagonal = jc.at("include_diagonal").get<bool>();
  c.seed = jc.at("seed").get<std::uint64_t>();

  std::vector<CovTree> trees;
  for (const json& jt : doc.at("trees")) {
    CovTree tree;
    for (const json& jn : jt.at("nodes")) {
      TreeNode node;
      if (jn.size() == 5) {
        node.split = SplitRule{jn[0].get<std::size_t>(), jn[1].get<double>(), jn[2].get<double>()};
        node.left = jn[3].get<std::uint32_t>();
        node.right = jn[4].get<std::uint32_t>();
      } else if (jn.size() == 1) {
        node.leaf = jn[0].get<std::uint32_t>();
      } else {
        fail(ErrorCode::ParseError, "malformed tree node");
      }
      tree.nodes.push_back(node);
    }
    for (const json& jl : jt.at("leaves")) {
      const auto packed = jl.at("cov").get<std::vector<double>>();
      if (packed.size() != packed_size(p)) fail(ErrorCode::ParseError, "leaf covariance has wrong size");
      TreeLeaf leaf{SymMatrix(p), jl.at("n").get<std::size_t>(), {}};
      std::copy(packed.begin(), packed.end(), leaf.cov.packed().begin());
      tree.leaves.push_back(std::move(leaf));
    }
    trees.push_back(std::move(tree));
  }
  return CovForest(std::move(trees), c, q, doc.at("training_fingerprint").get<std::uint64_t>());
}

}  // namespace

void save_forest(const CovForest& forest, const std::string& path) {
  const json doc = to_json(forest);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  if (wants_cbor(path)) {
    const auto bytes = json::to_cbor(doc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  } else {
    out << doc.dump() << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

CovForest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    if (wants_cbor(path)) {
      const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      return from_json(json::from_cbor(bytes));
    }
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("forest file '") + path + "': " + e.what());
  }
}

}  // namespace condcov
