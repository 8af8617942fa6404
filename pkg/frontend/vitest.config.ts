import { defineConfig } from "vitest/config";

// Several tests spawn python3 or the consumer CLI; give them room.
export default defineConfig({
  test: {
    testTimeout: 180_000,
    hookTimeout: 60_000,
  },
});
