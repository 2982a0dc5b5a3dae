/**
 * jsdom-side test utilities: wiring the session settings to the fixture
 * service, mounting components, and polling the DOM for async renders.
 */

import { inject } from 'vitest';
import { updateSettings } from '../src/config.js';
import type { SeededIds } from './global-setup.js';

export function fixtureBase(): string {
  return inject('apiBase');
}

export function fixtureFleet(): string {
  return inject('fleet');
}

export function seededIds(): SeededIds {
  return inject('seeded');
}

/** Point the app at the live fixture service with a clean session. */
export function connectToFixture(): void {
  sessionStorage.clear();
  updateSettings({ baseUrl: fixtureBase(), fleet: fixtureFleet(), token: '' });
}

export interface Updatable extends HTMLElement {
  updateComplete: Promise<unknown>;
}

export async function mount<T extends Updatable>(
  tag: string,
  props: Record<string, unknown> = {},
): Promise<T> {
  const el = document.createElement(tag) as T;
  Object.assign(el, props);
  document.body.appendChild(el);
  await el.updateComplete;
  return el;
}

export function unmountAll(): void {
  document.body.innerHTML = '';
  window.location.hash = '';
}

export function navigate(hash: string): void {
  window.location.hash = hash;
  // jsdom dispatches hashchange asynchronously; fire it now for determinism
  window.dispatchEvent(new Event('hashchange'));
}

/**
 * Poll until the probe returns a truthy value; rethrows its last failure on
 * timeout so assertions inside the probe surface as themselves.
 */
export async function until<T>(
  probe: () => T | Promise<T>,
  timeoutMs = 15_000,
  intervalMs = 50,
): Promise<NonNullable<T>> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = new Error('condition never became true');
  for (;;) {
    try {
      const value = await probe();
      if (value) return value as NonNullable<T>;
      lastError = new Error('probe kept returning a falsy value');
    } catch (err) {
      lastError = err;
    }
    if (Date.now() >= deadline) break;
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
  throw lastError instanceof Error ? lastError : new Error(String(lastError));
}

export function text(root: ParentNode, selector: string): string {
  const node = root.querySelector(selector);
  return node?.textContent?.replace(/\s+/g, ' ').trim() ?? '';
}
