#include <patrol/patrol.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "nn/policy.hpp"

namespace {

// Owns a C string returned by the library.
struct CStr {
  char* p = nullptr;
  ~CStr() { patrol_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

constexpr const char* kSixMap =
    "C.....\n"
    "......\n"
    "..#...\n"
    "......\n"
    "......\n"
    "......\n";

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("version and error plumbing") {
    CHECK(std::string(patrol_version()) == "1.0.0");
    patrol_map* map = nullptr;
    CHECK(patrol_map_parse("C.X", &map) == PATROL_E_UNKNOWN_GLYPH);
    CHECK(std::string(patrol_last_error()).find("glyph") !=
          std::string::npos);
    CHECK(patrol_map_parse(kSixMap, &map) == PATROL_OK);
    CHECK(std::string(patrol_last_error()).empty());
    patrol_map_free(map);
    CHECK(patrol_map_parse(nullptr, &map) == PATROL_E_INVALID_ARGUMENT);
    CHECK(patrol_map_parse("C.", nullptr) == PATROL_E_INVALID_ARGUMENT);
  }

  TEST_CASE("map surface") {
    patrol_map* map = nullptr;
    REQUIRE(patrol_map_parse("C.23\n...#\n", &map) == PATROL_OK);
    CHECK(patrol_map_width(map) == 4);
    CHECK(patrol_map_height(map) == 2);
    CHECK(patrol_map_cell_kind(map, 0, 0) == PATROL_CELL_STATION);
    CHECK(patrol_map_cell_kind(map, 0, 1) == PATROL_CELL_VERTEX);
    CHECK(patrol_map_cell_kind(map, 1, 3) == PATROL_CELL_OBSTACLE);
    CHECK(patrol_map_cell_kind(map, 5, 5) == -1);
    CHECK(patrol_map_priority(map, 0, 2) == 2);
    CHECK(patrol_map_priority(map, 0, 3) == 3);
    CHECK(patrol_map_priority(map, 0, 1) == 0);
    CHECK(patrol_map_priority(map, 1, 3) == -1);
    CHECK(patrol_map_priority(map, 9, 9) == INT32_MIN);

    CStr text;
    REQUIRE(patrol_map_render(map, &text.p) == PATROL_OK);
    patrol_map* again = nullptr;
    REQUIRE(patrol_map_parse(text.p, &again) == PATROL_OK);
    CStr text2;
    REQUIRE(patrol_map_render(again, &text2.p) == PATROL_OK);
    CHECK(text.str() == text2.str());
    patrol_map_free(again);
    patrol_map_free(map);

    // Failure statuses carry their specific codes.
    patrol_map* bad = nullptr;
    CHECK(patrol_map_parse("..\n..", &bad) == PATROL_E_NO_STATION);
    CHECK(patrol_map_parse("C#.\n###\n..C", &bad) ==
          PATROL_E_DISCONNECTED_GRAPH);
    CHECK(patrol_map_parse("C..\n....", &bad) == PATROL_E_NON_RECTANGULAR);
    CHECK(patrol_map_load("/tmp/patrol_missing_map.txt", &bad) ==
          PATROL_E_IO);

    patrol_map* generated = nullptr;
    const char* gen_opts =
        R"({"width":8,"height":7,"obstacle_density":0.15,)"
        R"("priority_density":0.2,"stations":2,"seed":11})";
    REQUIRE(patrol_map_generate(gen_opts, &generated) == PATROL_OK);
    CHECK(patrol_map_width(generated) == 8);
    CHECK(patrol_map_height(generated) == 7);
    int stations = 0;
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 8; ++c)
        if (patrol_map_cell_kind(generated, r, c) == PATROL_CELL_STATION)
          ++stations;
    CHECK(stations == 2);
    patrol_map_free(generated);
    CHECK(patrol_map_generate(R"({"wdith":8})", &generated) ==
          PATROL_E_BAD_CONFIG);
    CHECK(patrol_map_generate("{nope", &generated) == PATROL_E_BAD_CONFIG);
  }

  TEST_CASE("world surface") {
    patrol_map* map = nullptr;
    REQUIRE(patrol_map_parse(kSixMap, &map) == PATROL_OK);
    patrol_world* world = nullptr;
    REQUIRE(patrol_world_create(map, R"({"b_max":400.0,"p_dyn_max":0.0})", 2,
                                42, &world) == PATROL_OK);

    uint8_t mask[5] = {9, 9, 9, 9, 9};
    REQUIRE(patrol_world_valid_actions(world, 0, mask) == PATROL_OK);
    CHECK(mask[PATROL_ACTION_STAY] == 1);
    for (int a = 0; a < 5; ++a) CHECK((mask[a] == 0 || mask[a] == 1));
    CHECK(patrol_world_valid_actions(world, 7, mask) ==
          PATROL_E_UNKNOWN_AGENT);

    const uint32_t messages[2] = {1, 5};
    const uint32_t actions[2] = {PATROL_ACTION_STAY, PATROL_ACTION_STAY};
    CStr outcome;
    REQUIRE(patrol_world_step(world, messages, actions, 2, &outcome.p) ==
            PATROL_OK);
    auto oj = nlohmann::json::parse(outcome.str());
    CHECK(oj["step"] == 1);
    CHECK(oj["duration_minutes"].get<double>() > 0.0);
    CHECK(oj["collisions"].get<int>() >= 0);
    CHECK(oj["idleness_mean"].get<double>() >= 0.0);
    CHECK(oj["idleness_max"].get<double>() >= oj["idleness_mean"].get<double>());
    CHECK(oj["events"].is_array());

    CHECK(patrol_world_step(world, messages, actions, 1, nullptr) ==
          PATROL_E_LENGTH_MISMATCH);
    const uint32_t bad_msg[2] = {0, 1};
    CHECK(patrol_world_step(world, bad_msg, actions, 2, nullptr) ==
          PATROL_E_MESSAGE_OUT_OF_RANGE);

    CStr state;
    REQUIRE(patrol_world_state_json(world, &state.p) == PATROL_OK);
    auto sj = nlohmann::json::parse(state.str());
    CHECK(sj["agents"].size() == 2);
    CHECK(sj["idleness"].size() == 6);
    CHECK(sj["idleness"][0].size() == 6);
    for (const auto& agent : sj["agents"]) {
      CHECK(agent["battery"].get<double>() <= 400.0);
      CHECK(agent["status"] == "active");
      CHECK(agent["last_message"].get<int>() >= 1);
    }

    // A malformed env object is rejected up front.
    patrol_world* bad_world = nullptr;
    CHECK(patrol_world_create(map, R"({"bmax":1})", 1, 1, &bad_world) ==
          PATROL_E_BAD_CONFIG);
    CHECK(patrol_world_create(map, "", 200, 1, &bad_world) ==
          PATROL_E_TOO_MANY_AGENTS);

    patrol_world_free(world);
    patrol_map_free(map);
  }

  TEST_CASE("simulate, compare and the error report path") {
    const std::string map_path = "/tmp/patrol_capi_map.txt";
    {
      std::FILE* f = std::fopen(map_path.c_str(), "w");
      REQUIRE(f != nullptr);
      std::fputs(kSixMap, f);
      std::fclose(f);
    }

    const std::string options = std::string(R"({"map_path":")") + map_path +
                                R"(","strategy":"cr","episodes":3,)"
                                R"("horizon":80,"agents":2,"seed":5})";
    CStr report1, report2;
    REQUIRE(patrol_simulate(options.c_str(), &report1.p) == PATROL_OK);
    REQUIRE(patrol_simulate(options.c_str(), &report2.p) == PATROL_OK);
    CHECK(report1.str() == report2.str());
    auto rj = nlohmann::json::parse(report1.str());
    CHECK(rj["strategy"] == "cr");
    CHECK(rj["episodes_kept"] == 3);
    CHECK(rj["aggregate"]["avg_idleness"]["mean"].get<double>() > 0.0);

    // Runtime failures surface their status and message.
    CStr none;
    CHECK(patrol_simulate(R"({"map_path":"/tmp/patrol_nope.txt"})", &none.p) ==
          PATROL_E_IO);
    CHECK(patrol_simulate(R"({"episodes":3})", &none.p) ==
          PATROL_E_BAD_CONFIG);
    CHECK(patrol_simulate(R"({"map_path":"x","episodes":0})", &none.p) ==
          PATROL_E_BAD_CONFIG);
    CHECK(patrol_simulate("{bad json", &none.p) == PATROL_E_BAD_CONFIG);
    CHECK(patrol_simulate(nullptr, &none.p) == PATROL_E_INVALID_ARGUMENT);
    CHECK(patrol_simulate(options.c_str(), nullptr) ==
          PATROL_E_INVALID_ARGUMENT);

    const std::string cmp_options =
        std::string(R"({"map_path":")") + map_path +
        R"(","strategies":["cr","sebs"],"episodes":2,"horizon":60,)"
        R"("agents":2,"seed":3})";
    CStr cmp;
    REQUIRE(patrol_compare(cmp_options.c_str(), &cmp.p) == PATROL_OK);
    auto cj = nlohmann::json::parse(cmp.str());
    REQUIRE(cj["strategies"].size() == 2);
    CHECK(cj["strategies"][0]["strategy"] == "cr");
    CHECK(cj["strategies"][1]["strategy"] == "sebs");
    CHECK(patrol_compare(options.c_str(), &none.p) == PATROL_E_BAD_CONFIG);

    std::filesystem::remove(map_path);
  }

  TEST_CASE("train then evaluate through the C surface") {
    const std::string map_path = "/tmp/patrol_capi_train_map.txt";
    {
      std::FILE* f = std::fopen(map_path.c_str(), "w");
      REQUIRE(f != nullptr);
      std::fputs(kSixMap, f);
      std::fclose(f);
    }
    const std::string run_dir = "/tmp/patrol_capi_run";
    std::filesystem::remove_all(run_dir);

    const std::string train_options = std::string(R"({"map_path":")") +
                                      map_path + R"(","run_dir":")" + run_dir +
                                      R"(","seed":2,"config":{
      "train": {
        "episodes": 4, "horizon": 30, "parallel_episodes": 2,
        "batches": 2, "epochs": 1, "truncation": 6, "max_agents": 2,
        "checkpoint_every": 0,
        "curriculum": [{"until_episode": -1, "lane_agents": [1, 2]}],
        "dense1": 8, "dense2": 6, "dense3": 5, "gru": 5
      }}})";
    CStr train_report;
    REQUIRE(patrol_train(train_options.c_str(), &train_report.p) == PATROL_OK);
    auto tj = nlohmann::json::parse(train_report.str());
    CHECK(tj["episodes"] == 4);
    CHECK(std::filesystem::exists(run_dir + "/final.bin"));
    CHECK(std::filesystem::exists(run_dir + "/config.json"));
    CHECK(std::filesystem::exists(run_dir + "/metrics.jsonl"));

    const std::string eval_options =
        std::string(R"({"map_path":")") + map_path + R"(","checkpoint":")" +
        run_dir +
        R"(/final.bin","episodes":2,"horizon":40,"agents":2,"seed":8,
           "config":{"strategy":{"dense1":8,"dense2":6,"dense3":5,"gru":5}}})";
    CStr eval_report1, eval_report2;
    REQUIRE(patrol_evaluate(eval_options.c_str(), &eval_report1.p) ==
            PATROL_OK);
    REQUIRE(patrol_evaluate(eval_options.c_str(), &eval_report2.p) ==
            PATROL_OK);
    CHECK(eval_report1.str() == eval_report2.str());
    auto ej = nlohmann::json::parse(eval_report1.str());
    CHECK(ej["strategy"] == "rl");
    CHECK(ej["episodes_kept"] == 2);

    // evaluate without a checkpoint cannot build the policy.
    const std::string no_ckpt = std::string(R"({"map_path":")") + map_path +
                                R"(","episodes":2,"horizon":20,"seed":1})";
    CStr none;
    CHECK(patrol_evaluate(no_ckpt.c_str(), &none.p) == PATROL_E_BAD_CONFIG);

    std::filesystem::remove_all(run_dir);
    std::filesystem::remove(map_path);
  }
}
