import { describe, expect, it } from "vitest";

import { countTokens, inputTokens, tokenize } from "../src/tokenizer";

describe("tokenize", () => {
  it("splits punctuation into single-character tokens", () => {
    expect(tokenize("account.deposit(500);")).toEqual([
      "account", ".", "deposit", "(", "500", ")", ";",
    ]);
  });

  it("keeps identifiers with underscores and dollars whole", () => {
    expect(tokenize("my_var$2 = x_1;")).toEqual(["my_var$2", "=", "x_1", ";"]);
  });
});

describe("countTokens", () => {
  it("counts special markers as one token", () => {
    const text = "[<BREAKAGE>]\nfoo.bar();\n[</BREAKAGE>]";
    expect(countTokens(text)).toBe(8);
  });
});

describe("inputTokens", () => {
  it("keeps markers atomic and splits code", () => {
    expect(inputTokens("[<HUNK>] a.b(); [</HUNK>]")).toEqual([
      "[<HUNK>]", "a", ".", "b", "(", ")", ";", "[</HUNK>]",
    ]);
  });
});
