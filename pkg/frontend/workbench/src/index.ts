export * from './rle'
export * from './client'
export * from './session'
export * from './overlay'
