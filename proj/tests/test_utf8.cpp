// Copyright 2026 The polyseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "polyseg/utf8.hpp"

namespace polyseg {
namespace {

TEST(Utf8, DecodesMixedWidths) {
  EXPECT_EQ(utf8::decode("a\xC3\xA9\xE6\x88\x91\xF0\x9F\x98\x80"), std::u32string({U'a', U'é', U'我', U'\U0001F600'}));
}

TEST(Utf8, RoundTrip) {
  const std::string s = "我爱北京天安门 abc ½";
  EXPECT_EQ(utf8::encode(utf8::decode(s)), s);
}

TEST(Utf8, RejectsMalformed) {
  EXPECT_THROW(utf8::decode("\xE6\x88"), ParseError);      // truncated
  EXPECT_THROW(utf8::decode("\xC0\xAF"), ParseError);      // overlong
  EXPECT_THROW(utf8::decode("\xED\xA0\x80"), ParseError);  // surrogate
  EXPECT_THROW(utf8::decode("\x80"), ParseError);
}

TEST(Utf8, SplitChars) {
  EXPECT_EQ(utf8::split_chars(U"北京"), (std::vector<std::string>{"北", "京"}));
  EXPECT_TRUE(utf8::split_chars(U"").empty());
}

}  // namespace
}  // namespace polyseg
