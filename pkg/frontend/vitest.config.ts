import { defineConfig } from 'vitest/config';

export default defineConfig({
    test: {
        environment: 'node',
        // integration files spawn a real backend process; run files one at
        // a time so ports and stores never collide
        fileParallelism: false,
        testTimeout: 120_000,
        hookTimeout: 120_000,
    },
});
