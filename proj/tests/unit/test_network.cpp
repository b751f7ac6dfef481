#include <gtest/gtest.h>

#include "flowroute/errors.hpp"
#include "flowroute/network.hpp"

using namespace flowroute;

namespace {

constexpr const char* kCycle =
    "edge_id,u,v,length_m,speed_limit_mps,capacity,sigma,beta\n"
    "0,1,2,1500,15,10,0.15,4\n"
    "1,2,3,100,10,5,0.15,4\n"
    "2,3,4,100,10,5,0.15,4\n"
    "3,4,1,100,10,5,0.15,4\n";

}  // namespace

TEST(Network, LoadsFourCycle) {
  const auto net = load_network(std::string_view(kCycle));
  EXPECT_EQ(net.vertex_count(), 4u);
  EXPECT_EQ(net.edge_count(), 4u);
}

TEST(Network, FreeFlowFromLengthAndSpeed) {
  const auto net = load_network(std::string_view(kCycle));
  EXPECT_EQ(net.edge(*net.find_edge_by_id(0)).attrs.free_flow_ms, 100000);
  EXPECT_EQ(free_flow_time(1500, 15), 100000);
  EXPECT_EQ(free_flow_time(0.0001, 100), 1);  // floors at 1 ms
  EXPECT_EQ(free_flow_time(10, 3), 3333);
  EXPECT_EQ(free_flow_time(5, 2000), 3);  // 2.5 rounds half-up
}

TEST(Network, SigmaBetaDefaultWhenColumnsAbsent) {
  const auto net = load_network(std::string_view(
      "edge_id,u,v,length_m,speed_limit_mps,capacity,x_coord\n0,0,1,10,1,1,42.5\n"));
  EXPECT_DOUBLE_EQ(net.edge(0).attrs.sigma, 0.15);
  EXPECT_DOUBLE_EQ(net.edge(0).attrs.beta, 4.0);
}

TEST(Network, CommentsAndBlankLinesIgnored) {
  const auto net = load_network(std::string_view(
      "# a comment\n\nedge_id,u,v,length_m,speed_limit_mps,capacity\n# more\n0,0,1,10,1,1\n"));
  EXPECT_EQ(net.edge_count(), 1u);
}

TEST(Network, ParseErrorCarriesLineNumber) {
  try {
    load_network(std::string_view("edge_id,u,v,length_m,speed_limit_mps,capacity\n0,0,1,10,1,1\n1,1,x,10,1,1\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(load_network(std::string_view("edge_id,u,v,length_m,speed_limit_mps,capacity\n0,0,1,10\n")),
               ParseError);
  EXPECT_THROW(load_network(std::string_view("edge_id,u,v,length_m\n")), ParseError);
  EXPECT_THROW(load_network(std::string_view("")), ParseError);
}

TEST(Network, DuplicateEdgeRejected) {
  EXPECT_THROW(load_network(std::string_view(
                   "edge_id,u,v,length_m,speed_limit_mps,capacity\n0,0,1,10,1,1\n1,0,1,20,1,1\n")),
               DuplicateError);
  EXPECT_THROW(load_network(std::string_view(
                   "edge_id,u,v,length_m,speed_limit_mps,capacity\n0,0,1,10,1,1\n0,1,0,20,1,1\n")),
               DuplicateError);
}

TEST(Network, DanglingEndpointRejected) {
  EXPECT_THROW(load_network(std::string_view("# vertices: 0 1\n"
                                             "edge_id,u,v,length_m,speed_limit_mps,capacity\n"
                                             "0,0,1,10,1,1\n1,1,7,10,1,1\n")),
               NotFoundError);
}

TEST(Network, DeclaredIsolatedVertexKept) {
  const auto net = load_network(std::string_view(
      "# vertices: 0 1 9\nedge_id,u,v,length_m,speed_limit_mps,capacity\n0,0,1,10,1,1\n"));
  EXPECT_EQ(net.vertex_count(), 3u);
  EXPECT_TRUE(out_edges(net, 9).empty());
}

TEST(Network, BadAttributesRejected) {
  const std::string head = "edge_id,u,v,length_m,speed_limit_mps,capacity,sigma,beta\n";
  EXPECT_THROW(load_network(head + "0,0,1,0,1,1,0.15,4\n"), InputError);
  EXPECT_THROW(load_network(head + "0,0,1,10,-1,1,0.15,4\n"), InputError);
  EXPECT_THROW(load_network(head + "0,0,1,10,1,0.5,0.15,4\n"), InputError);
  EXPECT_THROW(load_network(head + "0,0,1,10,1,1,-0.1,4\n"), InputError);
  EXPECT_THROW(load_network(head + "0,0,1,10,1,1,0.1,-4\n"), InputError);
  EXPECT_THROW(load_network(head + "0,3,3,10,1,1,0.1,4\n"), InputError);
}

TEST(Network, OutEdgesOrderedByTarget) {
  const auto net = load_network(std::string_view(
      "edge_id,u,v,length_m,speed_limit_mps,capacity\n"
      "0,5,9,10,1,1\n1,5,2,10,1,1\n2,5,7,10,1,1\n3,2,5,10,1,1\n"));
  const auto out = out_edges(net, 5);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(net.vertex_id(out[0].to), 2u);
  EXPECT_EQ(net.vertex_id(out[1].to), 7u);
  EXPECT_EQ(net.vertex_id(out[2].to), 9u);
  EXPECT_TRUE(out_edges(net, 9).empty());  // sink
  EXPECT_THROW(out_edges(net, 1234), NotFoundError);
}

TEST(Network, GridInteriorHasFourOutEdges) {
  // 3x3 grid written by hand
  std::string csv = "edge_id,u,v,length_m,speed_limit_mps,capacity\n";
  int id = 0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const int v = r * 3 + c;
      auto add = [&](int w) { csv += std::to_string(id++) + "," + std::to_string(v) + "," + std::to_string(w) + ",100,10,5\n"; };
      if (r > 0) add(v - 3);
      if (c > 0) add(v - 1);
      if (c < 2) add(v + 1);
      if (r < 2) add(v + 3);
    }
  const auto net = load_network(csv);
  EXPECT_EQ(out_edges(net, 4).size(), 4u);
  EXPECT_EQ(out_edges(net, 0).size(), 2u);
  EXPECT_EQ(net.edge_count(), 24u);
}

TEST(Network, LoadIsPureFunctionOfBytes) {
  const auto a = load_network(std::string_view(kCycle));
  const auto b = load_network(std::string_view(kCycle));
  EXPECT_EQ(a, b);
  EXPECT_EQ(write_network_csv(a), write_network_csv(b));
  EXPECT_EQ(load_network(write_network_csv(a)), a);
}

TEST(Network, ResolvePath) {
  const auto net = load_network(std::string_view(kCycle));
  const std::vector<VertexId> ok{1, 2, 3};
  EXPECT_EQ(net.resolve_path(ok).size(), 2u);
  const std::vector<VertexId> gap{1, 3};
  EXPECT_THROW(net.resolve_path(gap), InvalidPathError);
  const std::vector<VertexId> single{1};
  EXPECT_THROW(net.resolve_path(single), InvalidPathError);
  const std::vector<VertexId> unknown{1, 99};
  EXPECT_THROW(net.resolve_path(unknown), NotFoundError);
}
