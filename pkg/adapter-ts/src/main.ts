/**
 * Entry point: line-delimited JSON over stdio, one response per request.
 * stdout carries protocol messages only; anything human-readable goes to
 * stderr. Exits 0 once stdin closes or a shutdown is acknowledged.
 *
 * Usage: node dist/main.js [--dataset <path>] [--seed <n>]
 * The flags preload defaults; the hello message remains authoritative.
 */

import { createInterface } from 'readline';
import * as protocol from './protocol';
import { Session } from './serve';

function parseArgs(argv: string[]): { dataset?: string; seed?: number } {
  const out: { dataset?: string; seed?: number } = {};
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === '--dataset' && i + 1 < argv.length) {
      out.dataset = argv[++i];
    } else if (argv[i] === '--seed' && i + 1 < argv.length) {
      out.seed = Number(argv[++i]);
    }
  }
  return out;
}

function main(): void {
  const defaults = parseArgs(process.argv.slice(2));
  const log = (line: string) => process.stderr.write(`[adapter] ${line}\n`);
  const session = new Session(log);

  const emit = (message: protocol.Message, last: boolean) => {
    const text = protocol.canonical(message) + '\n';
    if (last) {
      process.stdout.write(text, () => process.exit(0));
    } else {
      process.stdout.write(text);
    }
  };

  const rl = createInterface({ input: process.stdin, terminal: false });
  rl.on('line', (line) => {
    const trimmed = line.trim();
    if (trimmed.length === 0) {
      return;
    }
    const message = protocol.parseMessage(trimmed);
    if (message === null) {
      emit(
        protocol.error(session.nextSyntheticId(), protocol.E_PROTOCOL, 'undecodable line'),
        false,
      );
      return;
    }
    if (message.kind === protocol.HELLO) {
      // argv preloads fill gaps; an explicit hello always wins
      if (message.dataset === undefined && defaults.dataset !== undefined) {
        message.dataset = defaults.dataset;
      }
      if (message.seed === undefined && defaults.seed !== undefined) {
        message.seed = defaults.seed;
      }
    }
    emit(session.handle(message), session.done);
  });
  rl.on('close', () => {
    process.exitCode = 0;
  });
}

main();
