#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "trace/error.hpp"
#include "trace/pipeline/compressor.hpp"
#include "trace/pipeline/container.hpp"
#include "trace/pipeline/lanes.hpp"

namespace trace::pipeline {
namespace {

CompressOptions tiny(std::size_t lanes = 8) {
  CompressOptions o;
  o.model.hidden = 64;
  o.model.ffn = 256;
  o.lanes = lanes;
  o.seed = 3;
  return o;
}

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(gen());
  return v;
}

std::vector<std::uint8_t> text_bytes(std::size_t n) {
  static const std::string words[] = {"the ", "quick ", "brown ", "fox ", "jumps ", "over ",
                                      "a ",   "lazy ",  "dog. ",  "And ", "then ",  "it "};
  std::mt19937 gen(9);
  std::string s;
  while (s.size() < n) s += words[gen() % 12];
  return {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n)};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kState;
}

TEST(LanesTest, BalancedPartition) {
  EXPECT_EQ(segment_lanes(10, 3), (std::vector<LaneSegment>{{0, 4}, {4, 3}, {7, 3}}));
  EXPECT_EQ(segment_lanes(10, 1), (std::vector<LaneSegment>{{0, 10}}));
  EXPECT_EQ(segment_lanes(0, 2), (std::vector<LaneSegment>{{0, 0}, {0, 0}}));
  EXPECT_THROW(segment_lanes(10, 0), Error);
}

TEST(LanesTest, MoreLanesThanBytes) {
  const auto s = segment_lanes(3, 5);
  ASSERT_EQ(s.size(), 5u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s[i], (LaneSegment{i, 1}));
  for (std::size_t i = 3; i < 5; ++i) EXPECT_EQ(s[i].length, 0u);
}

TEST(LanesTest, CoversInputContiguously) {
  for (std::uint64_t len : {1u, 63u, 64u, 65u, 1000u, 99991u}) {
    for (std::size_t lanes : {1u, 2u, 7u, 64u}) {
      const auto s = segment_lanes(len, lanes);
      std::uint64_t pos = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s[i].offset, pos);
        pos += s[i].length;
        if (i > 0) {
          EXPECT_LE(s[i].length, s[i - 1].length);
          EXPECT_LE(s[0].length - s[i].length, 1u);
        }
      }
      EXPECT_EQ(pos, len);
    }
  }
}

TEST(ContainerTest, HeaderRoundTripAndSize) {
  ContainerHeader h;
  h.hidden = 256;
  h.ffn = 4096;
  h.group = 4;
  h.context = 8;
  h.shared_ffn = 2;
  h.heads = 8;
  h.lanes = 64;
  h.lr = 0.001f;
  h.controller = true;
  h.cache_capacity = 16;
  h.seed = 0x0102030405060708ULL;
  h.original_length = 123456789;
  h.payload_crc = 0xdeadbeef;
  std::vector<std::uint8_t> out;
  h.write(out);
  ASSERT_EQ(out.size(), 46u);
  EXPECT_EQ(out[0], 'T');
  EXPECT_EQ(out[3], 'E');
  EXPECT_EQ(out[4], kFormatVersion);
  EXPECT_EQ(out[5], 0x00);  // hidden, little-endian
  EXPECT_EQ(out[6], 0x01);
  EXPECT_EQ(ContainerHeader::read(out), h);
}

TEST(ContainerTest, Crc32KnownValue) {
  const std::string s = "123456789";
  EXPECT_EQ(crc32({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}), 0xCBF43926u);
}

TEST(ContainerTest, HeaderErrorsAreDistinct) {
  const auto good = compress({}, tiny());
  auto bad_magic = good;
  bad_magic[1] = 'X';
  EXPECT_EQ(code_of([&] { ContainerHeader::read(bad_magic); }), ErrorCode::kBadMagic);
  auto bad_version = good;
  bad_version[4] = 9;
  EXPECT_EQ(code_of([&] { ContainerHeader::read(bad_version); }), ErrorCode::kUnsupportedVersion);
  const std::vector<std::uint8_t> short_header(good.begin(), good.begin() + 20);
  EXPECT_EQ(code_of([&] { ContainerHeader::read(short_header); }), ErrorCode::kTruncated);
  const std::vector<std::uint8_t> not_trce{'P', 'K', 3, 4, 0, 0};
  EXPECT_EQ(code_of([&] { decompress(not_trce); }), ErrorCode::kBadMagic);
}

TEST(PipelineTest, EmptyInput) {
  JobReport report;
  const auto c = compress({}, tiny(), &report);
  EXPECT_LE(c.size(), ContainerHeader::kSize + 4);
  EXPECT_EQ(report.steps, 0u);
  EXPECT_TRUE(decompress(c).empty());
}

TEST(PipelineTest, ShortInputIsUniformCoded) {
  CompressOptions o = tiny(1);
  const auto x = random_bytes(o.model.window() - 1, 1);
  JobReport report;
  const auto c = compress(x, o, &report);
  const std::size_t payload = c.size() - ContainerHeader::kSize;
  EXPECT_GE(payload, x.size());
  EXPECT_LE(payload, x.size() + 4);
  EXPECT_EQ(report.updates, 0u);
  EXPECT_EQ(decompress(c), x);
}

TEST(PipelineTest, RandomBinaryRoundTrip) {
  const auto x = random_bytes(64 * 1024, 2);
  CompressOptions o = tiny(64);
  const auto c = compress(x, o);
  EXPECT_EQ(decompress(c), x);
}

TEST(PipelineTest, RoundTripWithControllerAndOddSizes) {
  for (std::size_t n : {1u, 31u, 33u, 100u, 1237u}) {
    for (bool ctrl : {false, true}) {
      CompressOptions o = tiny(7);
      o.controller = ctrl;
      o.cache_capacity = 5;
      const auto x = text_bytes(n);
      EXPECT_EQ(decompress(compress(x, o)), x) << n << " " << ctrl;
    }
  }
}

TEST(PipelineTest, PayloadBitFlipIsChecksumError) {
  const auto x = text_bytes(2000);
  auto c = compress(x, tiny());
  c[ContainerHeader::kSize + 10] ^= 0x04;
  EXPECT_EQ(code_of([&] { decompress(c); }), ErrorCode::kChecksumMismatch);
}

TEST(PipelineTest, MissingPayloadIsReported) {
  const auto x = text_bytes(5000);
  auto c = compress(x, tiny());
  c.resize(ContainerHeader::kSize + 10);
  // Recompute the checksum so only the length problem remains.
  ContainerHeader h = ContainerHeader::read(c);
  h.payload_crc = crc32(std::span(c).subspan(ContainerHeader::kSize));
  std::vector<std::uint8_t> fixed;
  h.write(fixed);
  fixed.insert(fixed.end(), c.begin() + ContainerHeader::kSize, c.end());
  EXPECT_EQ(code_of([&] { decompress(fixed); }), ErrorCode::kTruncated);
}

TEST(PipelineTest, IdenticalRunsGiveIdenticalContainers) {
  const auto x = text_bytes(6000);
  CompressOptions o = tiny();
  o.controller = true;
  EXPECT_EQ(compress(x, o), compress(x, o));
  CompressOptions other = o;
  other.seed = 4;
  EXPECT_NE(compress(x, o), compress(x, other));
}

TEST(PipelineTest, EncoderAndDecoderSeeSameDistributions) {
  const auto x = text_bytes(3000);
  std::vector<coder::QuantizedDistribution> enc_q, dec_q;
  Observer enc_obs, dec_obs;
  enc_obs.on_symbol = [&](std::uint64_t, std::size_t, const coder::QuantizedDistribution& q,
                          std::uint8_t) { enc_q.push_back(q); };
  dec_obs.on_symbol = [&](std::uint64_t, std::size_t, const coder::QuantizedDistribution& q,
                          std::uint8_t) { dec_q.push_back(q); };
  const auto c = compress(x, tiny(), nullptr, &enc_obs);
  EXPECT_EQ(decompress(c, nullptr, &dec_obs), x);
  ASSERT_EQ(enc_q.size(), x.size());
  EXPECT_TRUE(enc_q == dec_q);
}

TEST(PipelineTest, MetricsAreConsistent) {
  const auto x = text_bytes(20000);
  CompressOptions o = tiny(4);
  o.controller = true;
  JobReport report;
  report.chunk_bytes = 4096;
  const auto c = compress(x, o, &report);
  ASSERT_FALSE(report.chunks.empty());
  const ChunkRecord& last = report.chunks.back();
  EXPECT_EQ(last.bytes_in, x.size());
  EXPECT_EQ(last.bits_out / 8, c.size() - ContainerHeader::kSize);
  EXPECT_EQ(report.payload_bytes * 8, last.bits_out);
  EXPECT_LE(last.code_bits, static_cast<double>(last.bits_out));
  EXPECT_LE(last.skip_count, report.steps);
  EXPECT_EQ(last.skip_count, report.controller.skipped);
  EXPECT_EQ(report.updates + report.controller.skipped, report.controller.decisions);
  // 20000 bytes in 4 lanes: 5000 steps, of which the first window are warm-up.
  EXPECT_EQ(report.steps, 5000u);
  EXPECT_EQ(report.controller.decisions, 5000u - o.model.window());
  for (std::size_t i = 1; i < report.chunks.size(); ++i) {
    EXPECT_GE(report.chunks[i].bytes_in, report.chunks[i - 1].bytes_in);
    EXPECT_GE(report.chunks[i].bits_out, report.chunks[i - 1].bits_out);
    EXPECT_GE(report.chunks[i].bytes_in - report.chunks[i - 1].bytes_in, 1u);
  }
  EXPECT_GE(report.chunks.size(), 20000u / 4096);
}

TEST(PipelineTest, StepRecordsCoverEveryByte) {
  const auto x = text_bytes(1000);
  std::uint64_t coded = 0, model = 0, steps = 0;
  Observer obs;
  obs.on_step = [&](const StepRecord& r) {
    coded += r.coded_lanes;
    model += r.model_lanes;
    EXPECT_EQ(r.step, steps++);
    EXPECT_EQ(std::isnan(r.mean_loss), r.model_lanes == 0);
  };
  CompressOptions o = tiny(3);
  compress(x, o, nullptr, &obs);
  EXPECT_EQ(coded, x.size());
  EXPECT_EQ(model, x.size() - 3 * o.model.window());
}

TEST(PipelineTest, OptionsValidation) {
  CompressOptions o = tiny();
  o.lanes = 0;
  EXPECT_THROW(o.validate(), Error);
  o = tiny();
  o.lanes = 70000;
  EXPECT_THROW(o.validate(), Error);
  o = tiny();
  o.lr = -1.0f;
  EXPECT_THROW(o.validate(), Error);
  o = tiny();
  o.model.group = 5;
  EXPECT_THROW(compress(text_bytes(10), o), Error);
}

}  // namespace
}  // namespace trace::pipeline
